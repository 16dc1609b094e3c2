//! Small random models for cross-checking the engines.

use num_bigint::BigInt;

use crate::dist::Dist;
use crate::error::Error;
use crate::mdp::{Mdp, MdpBuilder};
use crate::oracle::oracle_trace_risk;
use crate::rational::Rational;
use crate::risk::RiskVector;
use crate::simulator::{simulate, Sampler, SimConfig};

#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_observations: usize,
    pub max_denominator: usize,
    /// Probability, in percent, that a distribution is forced to be Dirac.
    pub dirac_percent: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { max_states: 6, max_actions: 3, max_observations: 3, max_denominator: 8, dirac_percent: 25 }
    }
}

fn random_dist(rng: &mut Sampler, domain: usize, spec: &RandomSpec) -> Dist {
    let width = if rng.below(100) < spec.dirac_percent { 1 } else { 1 + rng.below(domain.min(3)) };
    let mut ids: Vec<usize> = (0..domain).collect();
    for i in 0..width {
        let j = i + rng.below(domain - i);
        ids.swap(i, j);
    }
    let ids = &ids[..width];
    let denominator = width + rng.below(spec.max_denominator + 1 - width);
    // Positive parts summing to the denominator.
    let mut parts = vec![1usize; width];
    for _ in 0..denominator - width {
        parts[rng.below(width)] += 1;
    }
    Dist::from_entries(
        ids.iter()
            .zip(parts)
            .map(|(&id, k)| (id, Rational::new(BigInt::from(k), BigInt::from(denominator)))),
    )
}

/// A valid model with state observations and a risk vector attached.
pub fn random_mdp(seed: u64, spec: &RandomSpec) -> Mdp {
    let mut rng = Sampler::new(seed);
    let n = 1 + rng.below(spec.max_states);
    let k = 1 + rng.below(spec.max_observations);
    let mut b = MdpBuilder::new();
    for s in 0..n {
        b.state(&format!("s{s}"));
    }
    for z in 0..k {
        b.observation(&format!("z{z}"));
    }
    let actions: Vec<usize> = (0..spec.max_actions).map(|a| b.action(&format!("a{a}"))).collect();
    for (s, p) in random_dist(&mut rng, n, spec).iter() {
        b.init(s, p.clone());
    }
    for s in 0..n {
        let count = 1 + rng.below(spec.max_actions);
        for &a in &actions[..count] {
            for (t, p) in random_dist(&mut rng, n, spec).iter() {
                b.trans(s, a, t, p.clone());
            }
        }
        for (z, p) in random_dist(&mut rng, k, spec).iter() {
            b.obs(s, z, p.clone());
        }
        let v = rng.below(5);
        let d = 1 + rng.below(4);
        b.risk(s, Rational::new(BigInt::from(v), BigInt::from(d)));
    }
    b.build().expect("random models are valid by construction")
}

pub fn attached_risk(m: &Mdp) -> RiskVector {
    m.risk().cloned().unwrap_or_else(|| RiskVector::zeros(m.num_states()))
}

/// A trace of length `1..=max_len`. Most traces are simulated from the
/// model; every fourth one is drawn uniformly and may be impossible.
pub fn random_trace(m: &Mdp, seed: u64, max_len: usize) -> Vec<usize> {
    let mut rng = Sampler::new(seed ^ 0x5eed);
    let len = 1 + rng.below(max_len);
    if seed % 4 == 3 {
        (0..len).map(|_| rng.below(m.num_observations())).collect()
    } else {
        simulate(m, SimConfig { seed, length: len }).expect("state observations").trace
    }
}

/// One corpus entry with its brute-force reference value.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub model: Mdp,
    pub risk: RiskVector,
    pub trace: Vec<usize>,
    /// `None` when the trace is impossible.
    pub reference: Option<Rational>,
}

/// The first `count` seeds whose instance the oracle can enumerate within
/// `cap`; larger instances are skipped.
pub fn corpus(count: usize, spec: &RandomSpec, max_len: usize, cap: u128) -> Vec<Instance> {
    let mut out = Vec::with_capacity(count);
    let mut seed = 0u64;
    while out.len() < count {
        let model = random_mdp(seed, spec);
        let risk = attached_risk(&model);
        let trace = random_trace(&model, seed, max_len);
        let reference = match oracle_trace_risk(&model, &trace, &risk, cap) {
            Ok(v) => Some(v),
            Err(Error::TraceImpossible { .. }) => None,
            Err(_) => {
                seed += 1;
                continue;
            }
        };
        out.push(Instance { seed, model, risk, trace, reference });
        seed += 1;
    }
    out
}
