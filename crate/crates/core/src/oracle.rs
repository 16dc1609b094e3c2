//! Brute-force ground truth for small instances.
//!
//! [`oracle_trace_risk`] enumerates deterministic step-counting schedulers
//! (one action per state and step) over the reachable supports, keeping
//! unnormalized forward vectors. [`dp_trace_risk`] computes the same value
//! by a fractional-programming iteration over a backward dynamic program.

use std::collections::HashSet;

use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dist::{Dist, SparseAcc};
use crate::error::{Error, Result};
use crate::mdp::{Choice, Mdp, ObservationKind};
use crate::rational::Rational;
use crate::risk::RiskVector;

pub const DEFAULT_CAP: u128 = 2_000_000;

/// Action per (step, state) for steps `0..len-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DcScheduler {
    table: Vec<Vec<usize>>,
}

impl DcScheduler {
    /// `table[i][s]` is the action id played in state `s` at step `i`.
    pub fn new(m: &Mdp, table: Vec<Vec<usize>>) -> Result<Self> {
        for row in &table {
            if row.len() != m.num_states() {
                return Err(Error::Unsupported("scheduler row length differs from state count".into()));
            }
            for (s, &a) in row.iter().enumerate() {
                if !m.choices(s).iter().any(|c| c.action == a) {
                    return Err(Error::Unsupported(format!(
                        "action {} not available in state {}",
                        m.action_name(a),
                        m.state_name(s)
                    )));
                }
            }
        }
        Ok(DcScheduler { table })
    }

    /// Picks `pick(step, state)` as a choice index into `m.choices(state)`.
    pub fn from_fn(m: &Mdp, steps: usize, pick: impl Fn(usize, usize) -> usize) -> Self {
        let table = (0..steps)
            .map(|i| {
                (0..m.num_states())
                    .map(|s| {
                        let cs = m.choices(s);
                        cs[pick(i, s) % cs.len()].action
                    })
                    .collect()
            })
            .collect();
        DcScheduler { table }
    }

    pub fn action(&self, step: usize, s: usize) -> usize {
        self.table[step][s]
    }

    pub fn steps(&self) -> usize {
        self.table.len()
    }
}

fn choice_for<'a>(m: &'a Mdp, s: usize, a: usize) -> &'a Choice {
    m.choices(s).iter().find(|c| c.action == a).expect("scheduler action is available")
}

fn initial_emission(m: &Mdp, s: usize, z: usize) -> Rational {
    m.state_obs(s).map(|d| d.get(z)).unwrap_or_else(Rational::zero)
}

/// Probability of emitting `z` when `c` is taken and `t` is entered.
fn step_emission(m: &Mdp, c: &Choice, t: usize, z: usize) -> Rational {
    match &c.obs {
        Some(d) => d.get(z),
        None => initial_emission(m, t, z),
    }
}

/// Exact `Pr_σ[τ]` by enumerating every path of length `|τ|`.
pub fn oracle_trace_prob(m: &Mdp, sigma: &DcScheduler, trace: &[usize], cap: u128) -> Result<Rational> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if sigma.steps() + 1 < trace.len() {
        return Err(Error::Unsupported("scheduler shorter than the trace".into()));
    }
    let mut visited: u128 = 0;
    let mut total = Rational::zero();
    // Explicit stack of (state, step, probability so far).
    let mut stack: Vec<(usize, usize, Rational)> = Vec::new();
    for (s, p) in m.init().iter() {
        let e = initial_emission(m, s, trace[0]);
        if !e.is_zero() {
            stack.push((s, 0, p * e));
        }
    }
    while let Some((s, i, p)) = stack.pop() {
        visited += 1;
        if visited > cap {
            return Err(Error::InstanceTooLarge { count: visited, cap });
        }
        if i + 1 == trace.len() {
            total += p;
            continue;
        }
        let c = choice_for(m, s, sigma.action(i, s));
        for (t, q) in c.succ.iter() {
            let e = step_emission(m, c, t, trace[i + 1]);
            if !e.is_zero() {
                stack.push((t, i + 1, &p * q * e));
            }
        }
    }
    Ok(total)
}

fn initial_vector(m: &Mdp, z: usize) -> Dist {
    let mut acc = SparseAcc::default();
    for (s, p) in m.init().iter() {
        let e = initial_emission(m, s, z);
        if !e.is_zero() {
            acc.add(s, p * e);
        }
    }
    acc.into_dist()
}

/// `max_σ Σ_π Pr_σ[π | τ]·r(last(π))` over deterministic step-counting
/// schedulers, by exhaustive enumeration.
pub fn oracle_trace_risk(m: &Mdp, trace: &[usize], r: &RiskVector, cap: u128) -> Result<Rational> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut visited: u128 = 0;
    let mut best: Option<Rational> = None;
    // Normalized prefix vectors already expanded at each depth.
    let mut memo: Vec<HashSet<Dist>> = vec![HashSet::new(); trace.len()];
    let mut stack: Vec<(usize, Dist)> = vec![(0, initial_vector(m, trace[0]))];
    while let Some((i, f)) = stack.pop() {
        visited += 1;
        if visited > cap {
            return Err(Error::InstanceTooLarge { count: visited, cap });
        }
        // The conditional risk is invariant under scaling, so subtrees are
        // shared between proportional prefixes.
        let Some(f) = f.normalized() else {
            continue;
        };
        if !memo[i].insert(f.clone()) {
            continue;
        }
        if i + 1 == trace.len() {
            let value = f.dot(r.values());
            if best.as_ref().is_none_or(|b| value > *b) {
                best = Some(value);
            }
            continue;
        }
        let z = trace[i + 1];
        let support: Vec<usize> = f.support().collect();
        // Contribution of each support state under each of its choices.
        let options: Vec<Vec<Vec<(usize, Rational)>>> = f
            .iter()
            .map(|(s, p)| {
                m.choices(s)
                    .iter()
                    .map(|c| {
                        c.succ
                            .iter()
                            .filter_map(|(t, q)| {
                                let e = step_emission(m, c, t, z);
                                (!e.is_zero()).then(|| (t, p * q * e))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut index = vec![0usize; support.len()];
        loop {
            visited += 1;
            if visited > cap {
                return Err(Error::InstanceTooLarge { count: visited, cap });
            }
            let mut acc = SparseAcc::default();
            for (k, &c) in index.iter().enumerate() {
                for (t, v) in &options[k][c] {
                    acc.add(*t, v.clone());
                }
            }
            stack.push((i + 1, acc.into_dist()));
            let mut k = support.len();
            while k > 0 {
                k -= 1;
                index[k] += 1;
                if index[k] < options[k].len() {
                    break;
                }
                index[k] = 0;
            }
            if index.iter().all(|&x| x == 0) {
                break;
            }
        }
    }
    best.ok_or(Error::TraceImpossible { at: None })
}

/// Backward values `W_i(s)` of `max_σ E[weight(last)·[τ emitted]]`.
/// `weight` is indexed by state. Returns `Σ ι(s)·W_0(s)` and the maximizing
/// step-counting scheduler (first best choice index per state and step).
fn backward_max(m: &Mdp, trace: &[usize], weight: &[Rational]) -> (Rational, Vec<Vec<usize>>) {
    let n = trace.len();
    let states = m.num_states();
    // w[s]: value at s for the current step, before s's own emission.
    let mut w: Vec<Rational> = weight.to_vec();
    let mut policy = vec![vec![0usize; states]; n.saturating_sub(1)];
    for i in (0..n - 1).rev() {
        let mut next = vec![Rational::zero(); states];
        for s in 0..states {
            let mut best: Option<(usize, Rational)> = None;
            for (k, c) in m.choices(s).iter().enumerate() {
                let mut v = Rational::zero();
                for (t, q) in c.succ.iter() {
                    let e = step_emission(m, c, t, trace[i + 1]);
                    if !e.is_zero() && !w[t].is_zero() {
                        v += q * e * &w[t];
                    }
                }
                if best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((k, v));
                }
            }
            let (k, v) = best.unwrap_or((0, Rational::zero()));
            policy[i][s] = k;
            next[s] = v;
        }
        w = next;
    }
    let mut total = Rational::zero();
    for (s, p) in m.init().iter() {
        let e = initial_emission(m, s, trace[0]);
        if !e.is_zero() {
            total += p * e * &w[s];
        }
    }
    (total, policy)
}

/// Numerator and denominator of the conditional risk under a fixed
/// step-counting scheduler given as choice indices.
fn evaluate_policy(m: &Mdp, trace: &[usize], r: &RiskVector, policy: &[Vec<usize>]) -> (Rational, Rational) {
    let mut f = initial_vector(m, trace[0]);
    for i in 0..trace.len() - 1 {
        let mut acc = SparseAcc::default();
        for (s, p) in f.iter() {
            let c = &m.choices(s)[policy[i][s]];
            for (t, q) in c.succ.iter() {
                let e = step_emission(m, c, t, trace[i + 1]);
                if !e.is_zero() {
                    acc.add(t, p * q * e);
                }
            }
        }
        f = acc.into_dist();
    }
    (f.dot(r.values()), f.total())
}

/// Same quantity as [`oracle_trace_risk`], computed by Dinkelbach iteration:
/// `λ ← N_σ/D_σ` for the σ maximizing `N_σ − λ·D_σ`, until that maximum is 0.
pub fn dp_trace_risk(m: &Mdp, trace: &[usize], r: &RiskVector) -> Result<Rational> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let ones = vec![Rational::one(); m.num_states()];
    let (max_d, _) = backward_max(m, trace, &ones);
    if max_d.is_zero() {
        return Err(Error::TraceImpossible { at: None });
    }
    let mut lambda = Rational::zero();
    loop {
        let weight: Vec<Rational> = r.values().iter().map(|v| v - &lambda).collect();
        let (g, policy) = backward_max(m, trace, &weight);
        if g <= Rational::zero() {
            return Ok(lambda);
        }
        let (num, den) = evaluate_policy(m, trace, r, &policy);
        lambda = num / den;
    }
}

/// Conditional risk under a randomly drawn randomized scheduler that may
/// depend on the whole history. Returns `None` if the trace has probability
/// zero under it.
pub fn history_scheduler_risk(m: &Mdp, trace: &[usize], r: &RiskVector, seed: u64, cap: u128) -> Result<Option<Rational>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut num = Rational::zero();
    let mut den = Rational::zero();
    let mut visited: u128 = 0;
    // (history hash, state, step, probability)
    let mut stack: Vec<(u64, usize, usize, Rational)> = Vec::new();
    for (s, p) in m.init().iter() {
        let e = initial_emission(m, s, trace[0]);
        if !e.is_zero() {
            stack.push((mix(seed, s as u64), s, 0, p * e));
        }
    }
    while let Some((h, s, i, p)) = stack.pop() {
        visited += 1;
        if visited > cap {
            return Err(Error::InstanceTooLarge { count: visited, cap });
        }
        if i + 1 == trace.len() {
            num += &p * r.get(s);
            den += p;
            continue;
        }
        let cs = m.choices(s);
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let raw: Vec<u64> = cs.iter().map(|_| rng.next_u64() % 4).collect();
        let sum: u64 = raw.iter().sum();
        for (k, c) in cs.iter().enumerate() {
            let w = if sum == 0 {
                if k == 0 { Rational::one() } else { Rational::zero() }
            } else {
                Rational::new(raw[k].into(), sum.into())
            };
            if w.is_zero() {
                continue;
            }
            for (t, q) in c.succ.iter() {
                let e = step_emission(m, c, t, trace[i + 1]);
                if !e.is_zero() {
                    let h2 = mix(mix(h, c.action as u64), t as u64);
                    stack.push((h2, t, i + 1, &p * &w * q * e));
                }
            }
        }
    }
    Ok(if den.is_zero() { None } else { Some(num / den) })
}

fn mix(h: u64, x: u64) -> u64 {
    let mut v = h ^ x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    v ^= v >> 31;
    v.wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

/// Requires a model whose observations come from states or state-action
/// pairs, not a fully observable one.
pub fn check_observable(m: &Mdp) -> Result<()> {
    if m.observation_kind() == ObservationKind::Full {
        return Err(Error::Unsupported("model has no observation function".into()));
    }
    Ok(())
}
