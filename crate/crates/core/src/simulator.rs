//! Seeded trace generation.
//!
//! The generator is ChaCha20 seeded with `seed_from_u64`. Each step draws,
//! in order: the action (uniform over the state's choices), the successor,
//! then the observation. A uniform index below `k` is `(bits·k) >> 64`; a
//! distribution is sampled by comparing `bits / 2^64` against its cumulative
//! thresholds in entry order and taking the first threshold that exceeds it.

use num_bigint::BigInt;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::mdp::{Mdp, ObservationKind};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<usize>,
    /// `actions[i]` was taken in `states[i]`.
    pub actions: Vec<usize>,
    pub trace: Vec<usize>,
}

pub struct Sampler {
    rng: ChaCha20Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn below(&mut self, k: usize) -> usize {
        ((self.rng.next_u64() as u128 * k as u128) >> 64) as usize
    }

    pub fn sample(&mut self, d: &Dist) -> usize {
        let u = Rational::new(BigInt::from(self.rng.next_u64()), BigInt::from(1u128 << 64));
        let mut cumulative = Rational::from_integer(0.into());
        let mut last = 0;
        for (id, p) in d.iter() {
            cumulative += p;
            last = id;
            if cumulative > u {
                return id;
            }
        }
        last
    }
}

/// Samples a path of `cfg.length` states and its observation trace.
pub fn simulate(m: &Mdp, cfg: SimConfig) -> Result<Run> {
    if cfg.length == 0 {
        return Err(Error::EmptyTrace);
    }
    if m.observation_kind() == ObservationKind::Full {
        return Err(Error::Unsupported("model has no observation function".into()));
    }
    let mut rng = Sampler::new(cfg.seed);
    let mut s = rng.sample(m.init());
    let first = m
        .state_obs(s)
        .ok_or_else(|| Error::Unsupported(format!("initial state {} has no observation", m.state_name(s))))?;
    let mut run = Run { states: vec![s], actions: Vec::new(), trace: vec![rng.sample(first)] };
    for _ in 1..cfg.length {
        let choices = m.choices(s);
        let c = &choices[rng.below(choices.len())];
        let t = rng.sample(&c.succ);
        let z = match &c.obs {
            Some(d) => rng.sample(d),
            None => rng.sample(m.obs(t)),
        };
        run.actions.push(c.action);
        run.states.push(t);
        run.trace.push(z);
        s = t;
    }
    Ok(run)
}
