//! Forward state estimators: support sets (KS), a single belief (MC) and
//! belief vertex sets (MDP).

mod hull;
mod session;

use std::collections::{BTreeSet, HashSet};

use num_traits::Zero;

use crate::deadline::Deadline;
use crate::dist::{Dist, SparseAcc};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::rational::Rational;
use crate::risk::RiskVector;

pub use hull::{hull_reduce, hull_reduce_pairwise, in_convex_hull};
pub use session::{Mode, MonitorSession};

/// A normalized distribution over states. The zero-belief is `None`
/// wherever it can occur.
pub type Belief = Dist;

fn emission(m: &Mdp, s: usize, z: usize) -> Option<&Rational> {
    m.obs_prob(s, z)
}

pub fn ks_step(m: &Mdp, prev: Option<&BTreeSet<usize>>, z: usize) -> BTreeSet<usize> {
    match prev {
        None => m.init().support().filter(|&s| emission(m, s, z).is_some()).collect(),
        Some(set) => {
            let mut out = BTreeSet::new();
            for &s in set {
                for c in m.choices(s) {
                    out.extend(c.succ.support().filter(|&t| emission(m, t, z).is_some()));
                }
            }
            out
        }
    }
}

pub fn ks_risk(set: &BTreeSet<usize>, r: &RiskVector) -> Result<Rational> {
    set.iter()
        .map(|&s| r.get(s).clone())
        .max()
        .ok_or(Error::TraceImpossible { at: None })
}

/// Initial belief `ι(s)·obs(s)(z)`, normalized.
pub fn initial_belief(m: &Mdp, z: usize) -> Option<Belief> {
    let mut acc = SparseAcc::default();
    for (s, p) in m.init().iter() {
        if let Some(q) = emission(m, s, z) {
            acc.add(s, p * q);
        }
    }
    acc.into_dist().normalized()
}

/// Unnormalized successor of `bel` when every state `s` plays `choice(s)`.
fn push_forward(m: &Mdp, bel: &Belief, z: usize, choice: impl Fn(usize) -> usize) -> Dist {
    let mut acc = SparseAcc::default();
    for (s, p) in bel.iter() {
        let c = &m.choices(s)[choice(s)];
        for (t, q) in c.succ.iter() {
            if let Some(o) = emission(m, t, z) {
                acc.add(t, p * q * o);
            }
        }
    }
    acc.into_dist()
}

/// Bayes update along the unique action of each state (the first one if a
/// state has several).
pub fn mc_step(m: &Mdp, prev: Option<&Belief>, z: usize) -> Option<Belief> {
    match prev {
        None => initial_belief(m, z),
        Some(bel) => push_forward(m, bel, z, |_| 0).normalized(),
    }
}

pub fn weighted_risk(bel: &Belief, r: &RiskVector) -> Rational {
    bel.dot(r.values())
}

pub fn mc_risk(bel: Option<&Belief>, r: &RiskVector) -> Result<Rational> {
    bel.map(|b| weighted_risk(b, r)).ok_or(Error::TraceImpossible { at: None })
}

/// Candidate successors of a vertex set: every belief reached by a
/// deterministic assignment of actions to the support of each vertex,
/// normalized, without the zero-belief and without exact duplicates.
pub fn mdp_step(m: &Mdp, prev: Option<&[Belief]>, z: usize, deadline: &Deadline) -> Result<Vec<Belief>> {
    let Some(prev) = prev else {
        return Ok(initial_belief(m, z).into_iter().collect());
    };
    let mut seen: HashSet<Belief> = HashSet::new();
    let mut out = Vec::new();
    let mut counter = 0u32;
    for bel in prev {
        // Per support state, the distinct contributions of its actions.
        let options: Vec<Vec<Dist>> = bel
            .iter()
            .map(|(s, p)| {
                let single = Dist::dirac(s).scaled(p);
                let mut distinct: Vec<Dist> = Vec::new();
                for i in 0..m.choices(s).len() {
                    let contribution = push_forward(m, &single, z, |_| i);
                    if !distinct.contains(&contribution) {
                        distinct.push(contribution);
                    }
                }
                distinct
            })
            .collect();
        let mut index = vec![0usize; options.len()];
        loop {
            counter = counter.wrapping_add(1);
            if counter % 256 == 0 {
                deadline.check()?;
            }
            let mut acc = SparseAcc::default();
            for (k, &i) in index.iter().enumerate() {
                for (t, p) in options[k][i].iter() {
                    acc.add(t, p.clone());
                }
            }
            if let Some(next) = acc.into_dist().normalized() {
                if seen.insert(next.clone()) {
                    out.push(next);
                }
            }
            // Odometer over the per-state options, last state fastest.
            let mut k = options.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                index[k] += 1;
                if index[k] < options[k].len() {
                    break;
                }
                index[k] = 0;
            }
            if index.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(out)
}

pub fn mdp_risk(vertices: &[Belief], r: &RiskVector) -> Result<Rational> {
    vertices
        .iter()
        .map(|b| weighted_risk(b, r))
        .max()
        .ok_or(Error::TraceImpossible { at: None })
}

/// Union of the vertex supports.
pub fn support_of(vertices: &[Belief]) -> BTreeSet<usize> {
    vertices.iter().flat_map(|b| b.support()).collect()
}

/// Single Bayes step of a belief under an explicit randomized choice:
/// `weights[s]` is a distribution over the indices of `m.choices(s)`.
pub fn randomized_step(m: &Mdp, bel: &Belief, z: usize, weights: &dyn Fn(usize) -> Dist) -> Option<Belief> {
    let mut acc = SparseAcc::default();
    for (s, p) in bel.iter() {
        for (i, w) in weights(s).iter() {
            for (t, q) in m.choices(s)[i].succ.iter() {
                if let Some(o) = emission(m, t, z) {
                    acc.add(t, p * w * q * o);
                }
            }
        }
    }
    let d = acc.into_dist();
    if d.total().is_zero() {
        None
    } else {
        d.normalized()
    }
}
