//! State-risk vectors: step-bounded reachability, scaling and indicator
//! reduction.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::rational::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiskVector {
    values: Vec<Rational>,
}

impl RiskVector {
    pub fn new(values: Vec<Rational>) -> Self {
        RiskVector { values }
    }

    pub fn zeros(n: usize) -> Self {
        RiskVector { values: vec![Rational::zero(); n] }
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get(&self, s: usize) -> &Rational {
        &self.values[s]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> Rational {
        self.values.iter().cloned().max().unwrap_or_else(Rational::zero)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReachMode {
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RiskSpec {
    BoundedReach { target: String, horizon: usize, mode: ReachMode },
    Explicit(RiskVector),
}

impl RiskSpec {
    /// Parses `reach-max(<label>,<H>)` or `reach-min(<label>,<H>)`.
    pub fn parse(text: &str) -> Result<RiskSpec> {
        let bad = || Error::InvalidRiskSpec(text.to_string());
        let text = text.trim();
        let (head, rest) = text.split_once('(').ok_or_else(bad)?;
        let mode = match head.trim() {
            "reach-max" => ReachMode::Max,
            "reach-min" => ReachMode::Min,
            _ => return Err(bad()),
        };
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let (label, horizon) = inner.split_once(',').ok_or_else(bad)?;
        let label = label.trim();
        if label.is_empty() {
            return Err(bad());
        }
        let horizon = horizon.trim().parse().map_err(|_| bad())?;
        Ok(RiskSpec::BoundedReach { target: label.to_string(), horizon, mode })
    }

    pub fn resolve(&self, m: &Mdp) -> Result<RiskVector> {
        match self {
            RiskSpec::Explicit(r) => {
                if r.len() != m.num_states() {
                    return Err(Error::InvalidRiskSpec(format!(
                        "risk vector has {} entries, model has {} states",
                        r.len(),
                        m.num_states()
                    )));
                }
                Ok(r.clone())
            }
            RiskSpec::BoundedReach { target, horizon, mode } => {
                let set = m.label(target).ok_or_else(|| Error::UnknownLabel(target.clone()))?;
                Ok(bounded_reach(m, set, *horizon, *mode))
            }
        }
    }
}

impl fmt::Display for RiskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskSpec::BoundedReach { target, horizon, mode } => {
                let m = if *mode == ReachMode::Max { "max" } else { "min" };
                write!(f, "reach-{m}({target},{horizon})")
            }
            RiskSpec::Explicit(r) => {
                let parts: Vec<String> = r.values().iter().map(format_rational).collect();
                write!(f, "explicit[{}]", parts.join(","))
            }
        }
    }
}

/// Optimal probability of hitting `target` within `horizon` steps, by
/// `horizon` exact Bellman sweeps. Target states count as already hit.
pub fn bounded_reach(m: &Mdp, target: &BTreeSet<usize>, horizon: usize, mode: ReachMode) -> RiskVector {
    let n = m.num_states();
    let mut v: Vec<Rational> = (0..n)
        .map(|s| if target.contains(&s) { Rational::one() } else { Rational::zero() })
        .collect();
    for _ in 0..horizon {
        let next: Vec<Rational> = (0..n)
            .map(|s| {
                if target.contains(&s) {
                    return Rational::one();
                }
                let values = m.choices(s).iter().map(|c| c.succ.dot(&v));
                match mode {
                    ReachMode::Max => values.max(),
                    ReachMode::Min => values.min(),
                }
                .unwrap_or_else(Rational::zero)
            })
            .collect();
        if next == v {
            break;
        }
        v = next;
    }
    RiskVector::new(v)
}

/// Divides `r` and `lambda` by `max(1, max r)` so that all risks lie in `[0,1]`.
pub fn scale_risk(r: &RiskVector, lambda: &Rational) -> (RiskVector, Rational) {
    let c = r.max().max(Rational::one());
    let scaled = r.values().iter().map(|v| v / &c).collect();
    (RiskVector::new(scaled), lambda / &c)
}

/// 0/1 indicator of `r(s) > lambda`.
pub fn risk_indicator_reduce(r: &RiskVector, lambda: &Rational) -> RiskVector {
    RiskVector::new(
        r.values()
            .iter()
            .map(|v| if v > lambda { Rational::one() } else { Rational::zero() })
            .collect(),
    )
}
