use std::time::Duration;

use crate::error::Result;
use crate::rational::{to_f64, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum RiskValue {
    Exact(Rational),
    Bounds { lower: f64, upper: f64 },
}

impl RiskValue {
    pub fn exact(&self) -> Option<&Rational> {
        match self {
            RiskValue::Exact(v) => Some(v),
            RiskValue::Bounds { .. } => None,
        }
    }

    pub fn approx(&self) -> f64 {
        match self {
            RiskValue::Exact(v) => to_f64(v),
            RiskValue::Bounds { lower, upper } => (lower + upper) / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Number of observations consumed, including this one.
    pub step: usize,
    pub risk: RiskValue,
    pub beliefs: Option<usize>,
    pub dim: Option<usize>,
    pub unrolled_states: Option<usize>,
    pub elapsed: Duration,
}

/// A monitor consumes one observation at a time and reports the current
/// trace risk.
pub trait Monitor {
    fn feed(&mut self, z: usize) -> Result<StepReport>;

    fn history(&self) -> &[StepReport];
}
