//! Trace risk as a maximal reachability probability: split observations so
//! they are deterministic, unroll the model along the trace with a terminal
//! risk lottery into ⊤/⊥, and send paths that contradict the trace back to
//! the start.

mod session;
mod solve;

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::dist::{Dist, SparseAcc};
use crate::error::{Error, Result};
use crate::filtering::ks_step;
use crate::mdp::{Choice, Mdp, MdpParts, ObsDeterminism};
use crate::rational::Rational;
use crate::risk::RiskVector;

pub use session::{Engine, UnrollingSession};
pub use solve::{exact_policy_iteration, interval_value_iteration, max_reach, ReachValue, DEFAULT_EPSILON};

/// Result of splitting every state by its possible observations.
#[derive(Clone, Debug)]
pub struct DetObs {
    pub model: Mdp,
    /// For each new state, the original state and the observation it emits.
    pub origin: Vec<(usize, usize)>,
}

impl DetObs {
    /// The observation emitted by a state of the split model.
    pub fn emits(&self, s: usize) -> usize {
        self.origin[s].1
    }

    pub fn lift_risk(&self, r: &RiskVector) -> RiskVector {
        RiskVector::new(self.origin.iter().map(|&(s, _)| r.get(s).clone()).collect())
    }
}

/// Splits each state `s` into one copy per `z` in `supp(obs(s))`; mass into
/// a copy is multiplied by `obs(s)(z)`. States with a Dirac observation keep
/// their name, split copies are named `s#z`.
pub fn det_obs_transform(m: &Mdp) -> Result<DetObs> {
    m.require_state_observations()?;
    let mut origin = Vec::new();
    let mut copies: Vec<Vec<(usize, Rational)>> = Vec::with_capacity(m.num_states());
    let mut names = Vec::new();
    for s in 0..m.num_states() {
        let obs = m.obs(s);
        let mut row = Vec::new();
        for (z, p) in obs.iter() {
            row.push((origin.len(), p.clone()));
            origin.push((s, z));
            names.push(if obs.is_dirac() {
                m.state_name(s).to_string()
            } else {
                format!("{}#{}", m.state_name(s), m.observation_name(z))
            });
        }
        copies.push(row);
    }
    let spread = |d: &Dist| {
        let mut acc = SparseAcc::default();
        for (t, p) in d.iter() {
            for (c, q) in &copies[t] {
                acc.add(*c, p * q);
            }
        }
        acc.into_dist()
    };
    let choices = origin
        .iter()
        .map(|&(s, _)| {
            m.choices(s)
                .iter()
                .map(|c| Choice { action: c.action, succ: spread(&c.succ), obs: None })
                .collect()
        })
        .collect();
    let labels = m
        .labels()
        .iter()
        .map(|(name, set)| {
            let lifted = origin.iter().enumerate().filter(|(_, (s, _))| set.contains(s)).map(|(i, _)| i).collect();
            (name.clone(), lifted)
        })
        .collect();
    let risk = m.risk().map(|r| RiskVector::new(origin.iter().map(|&(s, _)| r.get(s).clone()).collect()));
    let model = Mdp::from_parts(MdpParts {
        states: names,
        actions: m.action_names().to_vec(),
        observations: m.observation_names().to_vec(),
        init: spread(m.init()),
        choices,
        obs: origin.iter().map(|&(_, z)| Some(Dist::dirac(z))).collect(),
        labels,
        risk,
    });
    Ok(DetObs { model, origin })
}

pub const TOP: usize = 0;
pub const BOTTOM: usize = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Row {
    /// ⊤ and ⊥.
    Absorbing,
    /// One successor distribution into the next layer per action.
    Forward(Vec<(usize, Dist)>),
    /// The state contradicts the trace: every action restarts from the
    /// initial distribution, so a single choice is kept.
    Restart,
    /// Last layer: the given probability to ⊤, the rest to ⊥.
    Lottery(Rational),
}

/// Layered copy of a deterministic-observation model along a trace, plus ⊤
/// (id 0) and ⊥ (id 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnrolledMdp {
    origin: Vec<Option<(usize, usize)>>,
    rows: Vec<Row>,
    init: Dist,
    lookup: HashMap<(usize, usize), usize>,
    layers: usize,
}

impl UnrolledMdp {
    fn empty(layers: usize) -> Self {
        UnrolledMdp {
            origin: vec![None, None],
            rows: vec![Row::Absorbing, Row::Absorbing],
            init: Dist::default(),
            lookup: HashMap::new(),
            layers,
        }
    }

    fn add(&mut self, s: usize, layer: usize) -> usize {
        if let Some(&q) = self.lookup.get(&(s, layer)) {
            return q;
        }
        let q = self.rows.len();
        self.origin.push(Some((s, layer)));
        self.rows.push(Row::Restart);
        self.lookup.insert((s, layer), q);
        q
    }

    /// All states including ⊤ and ⊥.
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn origin(&self, q: usize) -> Option<(usize, usize)> {
        self.origin[q]
    }

    pub fn id(&self, s: usize, layer: usize) -> Option<usize> {
        self.lookup.get(&(s, layer)).copied()
    }

    pub fn row(&self, q: usize) -> &Row {
        &self.rows[q]
    }

    pub fn init(&self) -> &Dist {
        &self.init
    }

    pub fn layer_states(&self, layer: usize) -> Vec<usize> {
        (0..self.num_states()).filter(|&q| matches!(self.origin[q], Some((_, l)) if l == layer)).collect()
    }

    /// Successor distributions of `q`, one per available action.
    pub fn choices(&self, q: usize) -> Vec<Dist> {
        match &self.rows[q] {
            Row::Absorbing => vec![Dist::dirac(q)],
            Row::Forward(cs) => cs.iter().map(|(_, d)| d.clone()).collect(),
            Row::Restart => vec![self.init.clone()],
            Row::Lottery(p) => vec![lottery(p)],
        }
    }

    /// States in an order where every forward edge points to an earlier
    /// entry: last layer first.
    pub(crate) fn backward_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (2..self.num_states()).collect();
        order.sort_by_key(|&q| std::cmp::Reverse(self.origin[q].map_or(0, |(_, l)| l)));
        order
    }

    /// Drops every layered state not reachable from the initial distribution.
    pub fn prune_unreachable(&self) -> UnrolledMdp {
        let mut seen = vec![false; self.num_states()];
        let mut stack: Vec<usize> = self.init.support().collect();
        seen[TOP] = true;
        seen[BOTTOM] = true;
        for &q in &stack {
            seen[q] = true;
        }
        while let Some(q) = stack.pop() {
            for d in self.choices(q) {
                for t in d.support() {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        let mut out = UnrolledMdp::empty(self.layers);
        let mut map = vec![usize::MAX; self.num_states()];
        map[TOP] = TOP;
        map[BOTTOM] = BOTTOM;
        for q in 2..self.num_states() {
            if seen[q] {
                let (s, l) = self.origin[q].expect("layered state");
                map[q] = out.add(s, l);
            }
        }
        out.init = self.init.map_ids(|q| map[q]);
        for q in 2..self.num_states() {
            if seen[q] {
                out.rows[map[q]] = match &self.rows[q] {
                    Row::Forward(cs) => Row::Forward(cs.iter().map(|(a, d)| (*a, d.map_ids(|t| map[t]))).collect()),
                    other => other.clone(),
                };
            }
        }
        out
    }
}

impl UnrolledMdp {
    /// Starts an unrolling with no layers yet; the first [`UnrolledMdp::extend`]
    /// creates layer 0 from the initial distribution.
    pub fn start() -> Self {
        UnrolledMdp::empty(0)
    }

    /// Appends one layer for the observation `z`. Matching states of the old
    /// last layer get their forward rows; the new layer gets lotteries or
    /// restarts. Fails with `TraceImpossible` if nothing in the new layer
    /// matches `z`, leaving the model unusable.
    pub fn extend(&mut self, m: &Mdp, z: usize, r: &RiskVector) -> Result<()> {
        let layer = self.layers;
        let mut fresh: BTreeSet<usize> = BTreeSet::new();
        if layer == 0 {
            fresh.extend(m.init().support());
            for &s in &fresh {
                self.add(s, 0);
            }
            self.init = m.init().map_ids(|s| self.lookup[&(s, 0)]);
        } else {
            for q in self.layer_states(layer - 1) {
                if let Row::Lottery(_) = self.rows[q] {
                    let (s, _) = self.origin[q].expect("layered state");
                    let row = forward_row(m, s, |t| {
                        fresh.insert(t);
                        self.add(t, layer)
                    });
                    self.rows[q] = row;
                }
            }
        }
        self.layers += 1;
        let mut matched = false;
        for s in fresh {
            let q = self.lookup[&(s, layer)];
            self.rows[q] = if m.obs_prob(s, z).is_some() {
                matched = true;
                Row::Lottery(r.get(s).clone())
            } else {
                Row::Restart
            };
        }
        if matched {
            Ok(())
        } else {
            Err(Error::TraceImpossible { at: Some(layer) })
        }
    }
}

fn lottery(p: &Rational) -> Dist {
    Dist::from_entries(vec![(TOP, p.clone()), (BOTTOM, Rational::one() - p)])
}

fn forward_row(m: &Mdp, s: usize, next: impl FnMut(usize) -> usize) -> Row {
    let mut next = next;
    Row::Forward(
        m.choices(s)
            .iter()
            .map(|c| (c.action, Dist::from_entries(c.succ.iter().map(|(t, p)| (next(t), p.clone())).collect::<Vec<_>>())))
            .collect(),
    )
}

fn check_inputs(m: &Mdp, trace: &[usize], r: &RiskVector) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if crate::mdp::classify(m).1 != ObsDeterminism::DeterministicObs {
        return Err(Error::Unsupported("unrolling needs deterministic observations".into()));
    }
    if r.len() != m.num_states() || r.values().iter().any(|v| v > &Rational::one() || v < &Rational::zero()) {
        return Err(Error::InvalidRiskSpec("unrolling needs one risk in [0,1] per state".into()));
    }
    Ok(())
}

/// Full layered copy with `|trace|·|S|` states (no conditioning, no pruning).
pub fn unroll(m: &Mdp, trace: &[usize], r: &RiskVector) -> Result<UnrolledMdp> {
    check_inputs(m, trace, r)?;
    let n = trace.len();
    let mut u = UnrolledMdp::empty(n);
    for layer in 0..n {
        for s in 0..m.num_states() {
            u.add(s, layer);
        }
    }
    u.init = m.init().map_ids(|s| u.lookup[&(s, 0)]);
    for layer in 0..n {
        for s in 0..m.num_states() {
            let q = u.lookup[&(s, layer)];
            let row = if layer + 1 == n {
                Row::Lottery(r.get(s).clone())
            } else {
                let lookup = &u.lookup;
                forward_row(m, s, |t| lookup[&(t, layer + 1)])
            };
            u.rows[q] = row;
        }
    }
    Ok(u)
}

/// Replaces the rows of states whose observation contradicts the trace by a
/// restart from the initial distribution.
pub fn condition(u: &UnrolledMdp, m: &Mdp, trace: &[usize]) -> UnrolledMdp {
    let mut out = u.clone();
    for q in 2..u.num_states() {
        let (s, layer) = u.origin[q].expect("layered state");
        if m.obs_prob(s, trace[layer]).is_none() {
            out.rows[q] = Row::Restart;
        }
    }
    out
}

/// Conditioned unrolling materializing only reachable states. Fails with
/// `TraceImpossible` if no state of the last layer matches the trace.
pub fn build_conditioned(m: &Mdp, trace: &[usize], r: &RiskVector) -> Result<UnrolledMdp> {
    check_inputs(m, trace, r)?;
    let n = trace.len();
    let mut u = UnrolledMdp::empty(n);
    let mut frontier: BTreeSet<usize> = m.init().support().collect();
    for s in &frontier {
        u.add(*s, 0);
    }
    u.init = m.init().map_ids(|s| u.lookup[&(s, 0)]);
    for layer in 0..n {
        let mut next = BTreeSet::new();
        let mut matched = false;
        for &s in &frontier {
            let q = u.lookup[&(s, layer)];
            let row = if m.obs_prob(s, trace[layer]).is_none() {
                Row::Restart
            } else if layer + 1 == n {
                matched = true;
                Row::Lottery(r.get(s).clone())
            } else {
                matched = true;
                forward_row(m, s, |t| {
                    next.insert(t);
                    u.add(t, layer + 1)
                })
            };
            u.rows[q] = row;
        }
        if !matched {
            return Err(Error::TraceImpossible { at: Some(layer) });
        }
        frontier = next;
    }
    Ok(u)
}

/// Is there a path consistent with the trace ending in a state of positive
/// risk? Works by positivity alone.
pub fn qualitative_monitor(m: &Mdp, trace: &[usize], r: &RiskVector) -> Result<bool> {
    m.require_state_observations()?;
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut set = ks_step(m, None, trace[0]);
    for &z in &trace[1..] {
        set = ks_step(m, Some(&set), z);
    }
    Ok(set.iter().any(|&s| !r.get(s).is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deadline::Deadline;
    use crate::mdp::{classify, MdpBuilder};
    use crate::model_io::parse_model;
    use crate::oracle::oracle_trace_risk;
    use crate::rational::{frac, one, to_f64};

    fn five_state() -> Mdp {
        parse_model(include_str!("../../../../models/five_state.mdp")).unwrap()
    }

    fn ids(m: &Mdp, names: &[&str]) -> Vec<usize> {
        names.iter().map(|n| m.observation_id(n).unwrap()).collect()
    }

    /// One state that shows either symbol with equal odds.
    fn coin() -> Mdp {
        let mut b = MdpBuilder::new();
        let s = b.state("s");
        let t = b.state("t");
        let a = b.action("a");
        let (h, k) = (b.observation("h"), b.observation("k"));
        b.init(s, one());
        b.trans(s, a, s, frac(1, 2)).trans(s, a, t, frac(1, 2)).trans(t, a, t, one());
        b.obs(s, h, frac(1, 2)).obs(s, k, frac(1, 2)).obs(t, k, one());
        b.risk(s, frac(0, 1)).risk(t, one());
        b.build().unwrap()
    }

    #[test]
    fn splitting_makes_observations_deterministic() {
        let m = coin();
        let d = det_obs_transform(&m).unwrap();
        assert_eq!(d.model.state_names(), ["s#h", "s#k", "t"]);
        assert_eq!(classify(&d.model).1, ObsDeterminism::DeterministicObs);
        assert_eq!(d.origin, vec![(0, 0), (0, 1), (1, 1)]);
        assert_eq!(d.model.init().get(0), frac(1, 2));
        assert_eq!(d.lift_risk(m.risk().unwrap()).values(), [frac(0, 1), frac(0, 1), one()]);
    }

    #[test]
    fn conditioned_build_is_the_pruned_full_unrolling() {
        let m = five_state();
        let r = m.risk().unwrap().clone();
        let trace = ids(&m, &["z0", "z0", "z0"]);
        let full = unroll(&m, &trace, &r).unwrap();
        assert_eq!(full.num_states(), 2 + 3 * m.num_states());
        let cond = condition(&full, &m, &trace);
        let built = build_conditioned(&m, &trace, &r).unwrap();
        assert!(built.num_states() < full.num_states());
        let oracle = oracle_trace_risk(&m, &trace, &r, 100_000).unwrap();
        for u in [&cond, &built, &cond.prune_unreachable()] {
            let v = exact_policy_iteration(u, None, &Deadline::none()).unwrap().value;
            assert_eq!(v, oracle);
        }
    }

    #[test]
    fn interval_iteration_brackets_the_exact_value() {
        let m = coin();
        let r = m.risk().unwrap().clone();
        let trace = ids(&m, &["h", "k", "k"]);
        let d = det_obs_transform(&m).unwrap();
        let u = build_conditioned(&d.model, &trace, &d.lift_risk(&r)).unwrap();
        let exact = exact_policy_iteration(&u, None, &Deadline::none()).unwrap().value;
        let (lo, hi) = interval_value_iteration(&u, 1e-9, &Deadline::none()).unwrap();
        let x = to_f64(&exact);
        assert!(lo <= x && x <= hi && hi - lo <= 1e-9, "{lo} {x} {hi}");
        assert_eq!(exact, oracle_trace_risk(&m, &trace, &r, 10_000).unwrap());
    }

    #[test]
    fn impossible_traces_are_rejected() {
        let m = five_state();
        let r = m.risk().unwrap().clone();
        assert!(matches!(
            build_conditioned(&m, &ids(&m, &["z1"]), &r),
            Err(Error::TraceImpossible { at: Some(0) })
        ));
        let mut u = UnrolledMdp::start();
        u.extend(&m, 0, &r).unwrap();
        assert!(matches!(u.extend(&m, 5, &r), Err(_)));
    }

    #[test]
    fn qualitative_answer_follows_positivity() {
        let m = five_state();
        let r = m.risk().unwrap().clone();
        assert!(!qualitative_monitor(&m, &ids(&m, &["z0"]), &r).unwrap());
        assert!(qualitative_monitor(&m, &ids(&m, &["z0", "z0"]), &r).unwrap());
        assert!(!qualitative_monitor(&m, &ids(&m, &["z0", "z0", "z1"]), &r).unwrap());
    }
}
