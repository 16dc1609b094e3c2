//! World x sensor composition, the state-action observation lift and the
//! Kripke abstraction.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_traits::One;

use crate::dist::{Dist, SparseAcc};
use crate::error::{Error, Result};
use crate::mdp::{Choice, Mdp, MdpParts, ObservationKind};
use crate::rational::Rational;
use crate::risk::RiskVector;

/// Breadth-first product construction over hashable keys. Returns the
/// discovered keys in id order.
struct Explorer<K> {
    ids: HashMap<K, usize>,
    keys: Vec<K>,
    queue: VecDeque<usize>,
}

impl<K: Clone + Eq + std::hash::Hash> Explorer<K> {
    fn new() -> Self {
        Explorer { ids: HashMap::new(), keys: Vec::new(), queue: VecDeque::new() }
    }

    fn id(&mut self, key: K) -> usize {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len();
        self.ids.insert(key.clone(), id);
        self.keys.push(key);
        self.queue.push_back(id);
        id
    }

    fn next(&mut self) -> Option<(usize, K)> {
        self.queue.pop_front().map(|id| (id, self.keys[id].clone()))
    }
}

fn lift_labels(m: &Mdp, origin: &[usize]) -> std::collections::BTreeMap<String, BTreeSet<usize>> {
    m.labels()
        .iter()
        .map(|(name, set)| {
            let lifted = origin
                .iter()
                .enumerate()
                .filter(|(_, s)| set.contains(s))
                .map(|(i, _)| i)
                .collect();
            (name.clone(), lifted)
        })
        .collect()
}

fn lift_risk(m: &Mdp, origin: &[usize]) -> Option<RiskVector> {
    m.risk()
        .map(|r| RiskVector::new(origin.iter().map(|&s| r.get(s).clone()).collect()))
}

/// Synchronous product of a fully observable world and a sensor whose
/// actions are the world's states. Only states reachable from the initial
/// support are kept. Joint states are named `world@sensor`.
pub fn compose(world: &Mdp, sensor: &Mdp) -> Result<Mdp> {
    if world.observation_kind() != ObservationKind::Full {
        return Err(Error::Unsupported("world model must not have observations".into()));
    }
    if sensor.observation_kind() != ObservationKind::StateAction {
        return Err(Error::Unsupported("sensor model needs state-action observations".into()));
    }
    let world_states: BTreeSet<&str> = world.state_names().iter().map(String::as_str).collect();
    let sensor_actions: BTreeSet<&str> = sensor.action_names().iter().map(String::as_str).collect();
    if world_states != sensor_actions {
        let missing: Vec<&str> = world_states.symmetric_difference(&sensor_actions).copied().collect();
        return Err(Error::AlphabetMismatch(format!(
            "sensor actions and world states differ on {}",
            missing.join(", ")
        )));
    }
    // world state id -> sensor action id
    let as_action: Vec<usize> = world
        .state_names()
        .iter()
        .map(|n| sensor.action_id(n).expect("checked above"))
        .collect();
    let sensor_choice = |s: usize, u: usize| -> Result<&Choice> {
        sensor
            .choices(s)
            .iter()
            .find(|c| c.action == as_action[u])
            .ok_or_else(|| {
                Error::AlphabetMismatch(format!(
                    "sensor state {} does not accept world state {}",
                    sensor.state_name(s),
                    world.state_name(u)
                ))
            })
    };

    let mut ex: Explorer<(usize, usize)> = Explorer::new();
    let mut init = SparseAcc::default();
    for (u, pu) in world.init().iter() {
        for (s, ps) in sensor.init().iter() {
            init.add(ex.id((u, s)), pu * ps);
        }
    }
    let mut choices: Vec<Vec<Choice>> = Vec::new();
    let mut obs: Vec<Option<Dist>> = Vec::new();
    while let Some((id, (u, s))) = ex.next() {
        let sc = sensor_choice(s, u)?;
        let mut row = Vec::new();
        for wc in world.choices(u) {
            let mut acc = SparseAcc::default();
            for (u2, pu) in wc.succ.iter() {
                for (s2, ps) in sc.succ.iter() {
                    acc.add(ex.id((u2, s2)), pu * ps);
                }
            }
            row.push(Choice { action: wc.action, succ: acc.into_dist(), obs: None });
        }
        debug_assert_eq!(choices.len(), id);
        choices.push(row);
        obs.push(sc.obs.clone());
    }
    let keys = ex.keys;
    let states = keys
        .iter()
        .map(|&(u, s)| format!("{}@{}", world.state_name(u), sensor.state_name(s)))
        .collect();
    let world_origin: Vec<usize> = keys.iter().map(|&(u, _)| u).collect();
    let sensor_origin: Vec<usize> = keys.iter().map(|&(_, s)| s).collect();
    let mut labels = lift_labels(world, &world_origin);
    for (name, set) in lift_labels(sensor, &sensor_origin) {
        labels.entry(name).or_default().extend(set);
    }
    Ok(Mdp::from_parts(MdpParts {
        states,
        actions: world.action_names().to_vec(),
        observations: sensor.observation_names().to_vec(),
        init: init.into_dist(),
        choices,
        obs,
        labels,
        risk: lift_risk(world, &world_origin),
    }))
}

/// Turns state-action observations into state observations. Each reachable
/// pair (s, z) becomes a state `s#z` that emits z deterministically, where z
/// is the symbol emitted by the action that entered s. Initial states use
/// their state observation as the first symbol.
pub fn lift_state_action_obs(m: &Mdp) -> Result<Mdp> {
    if m.observation_kind() != ObservationKind::StateAction {
        return Err(Error::Unsupported("model has no state-action observations".into()));
    }
    let mut ex: Explorer<(usize, usize)> = Explorer::new();
    let mut init = SparseAcc::default();
    for (s, p) in m.init().iter() {
        let first = m.state_obs(s).ok_or_else(|| {
            Error::Unsupported(format!("initial state {} has no initial observation", m.state_name(s)))
        })?;
        for (z, pz) in first.iter() {
            init.add(ex.id((s, z)), p * pz);
        }
    }
    let mut choices = Vec::new();
    while let Some((_, (s, _))) = ex.next() {
        let mut row = Vec::new();
        for c in m.choices(s) {
            let emit = c.obs.as_ref().ok_or_else(|| {
                Error::Unsupported(format!(
                    "missing observation for ({}, {})",
                    m.state_name(s),
                    m.action_name(c.action)
                ))
            })?;
            let mut acc = SparseAcc::default();
            for (t, pt) in c.succ.iter() {
                for (z, pz) in emit.iter() {
                    acc.add(ex.id((t, z)), pt * pz);
                }
            }
            row.push(Choice { action: c.action, succ: acc.into_dist(), obs: None });
        }
        choices.push(row);
    }
    let keys = ex.keys;
    let origin: Vec<usize> = keys.iter().map(|&(s, _)| s).collect();
    Ok(Mdp::from_parts(MdpParts {
        states: keys
            .iter()
            .map(|&(s, z)| format!("{}#{}", m.state_name(s), m.observation_name(z)))
            .collect(),
        actions: m.action_names().to_vec(),
        observations: m.observation_names().to_vec(),
        init: init.into_dist(),
        choices,
        obs: keys.iter().map(|&(_, z)| Some(Dist::dirac(z))).collect(),
        labels: lift_labels(m, &origin),
        risk: lift_risk(m, &origin),
    }))
}

/// Replaces every probabilistic branch by nondeterminism: a choice with k
/// successors becomes k Dirac choices named `action>successor`.
pub fn kripke_abstraction(m: &Mdp) -> Mdp {
    let mut parts = m.clone().into_parts();
    let mut actions = parts.actions.clone();
    let mut action_ids: HashMap<String, usize> =
        actions.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    for row in &mut parts.choices {
        let mut out = Vec::new();
        for c in row.iter() {
            if c.succ.is_dirac() {
                out.push(c.clone());
                continue;
            }
            for t in c.succ.support() {
                let name = format!("{}>{}", parts.actions[c.action], parts.states[t]);
                let id = *action_ids.entry(name.clone()).or_insert_with(|| {
                    actions.push(name);
                    actions.len() - 1
                });
                out.push(Choice { action: id, succ: Dist::dirac(t), obs: c.obs.clone() });
            }
        }
        *row = out;
    }
    parts.actions = actions;
    if !parts.init.is_dirac() {
        // Keep the support; a Kripke structure still needs some initial mass.
        let k = Rational::from_integer(parts.init.len().into());
        parts.init = Dist::from_entries(parts.init.support().map(|s| (s, Rational::one() / &k)).collect::<Vec<_>>());
    }
    Mdp::from_parts(parts)
}
