use std::time::{Duration, Instant};

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::monitor::{Monitor, RiskValue, StepReport};
use crate::rational::{to_f64, Rational};
use crate::risk::{scale_risk, RiskVector};

use super::solve::{exact_policy_iteration, interval_value_iteration};
use super::{build_conditioned, det_obs_transform, DetObs, UnrolledMdp};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    ExactPi,
    IntervalVi { epsilon: f64 },
}

/// Monitor backed by the conditioned unrolling. Each feed adds one layer
/// (or rebuilds from scratch in rebuild mode) and re-solves.
pub struct UnrollingSession {
    split: DetObs,
    risk: RiskVector,
    scale: Rational,
    engine: Engine,
    rebuild: bool,
    limit: Option<Duration>,
    trace: Vec<usize>,
    unrolled: UnrolledMdp,
    policy: Vec<usize>,
    failure: Option<String>,
    history: Vec<StepReport>,
}

impl UnrollingSession {
    pub fn new(model: &Mdp, risk: &RiskVector, engine: Engine) -> Result<Self> {
        if risk.len() != model.num_states() {
            return Err(Error::InvalidRiskSpec(format!(
                "risk vector has {} entries, model has {} states",
                risk.len(),
                model.num_states()
            )));
        }
        let split = det_obs_transform(model)?;
        let lifted = split.lift_risk(risk);
        let scale = lifted.max().max(Rational::from_integer(1.into()));
        let (scaled, _) = scale_risk(&lifted, &Rational::from_integer(0.into()));
        Ok(UnrollingSession {
            split,
            risk: scaled,
            scale,
            engine,
            rebuild: false,
            limit: None,
            trace: Vec::new(),
            unrolled: UnrolledMdp::start(),
            policy: Vec::new(),
            failure: None,
            history: Vec::new(),
        })
    }

    /// Rebuild the unrolling from scratch on every feed.
    pub fn rebuilding(mut self) -> Self {
        self.rebuild = true;
        self
    }

    pub fn with_step_limit(mut self, limit: Option<Duration>) -> Self {
        self.limit = limit;
        self
    }

    pub fn unrolled(&self) -> &UnrolledMdp {
        &self.unrolled
    }

    pub fn split_model(&self) -> &DetObs {
        &self.split
    }

    pub fn is_dead(&self) -> bool {
        self.failure.is_some()
    }

    fn advance(&mut self, z: usize) -> Result<StepReport> {
        let m = &self.split.model;
        if z >= m.num_observations() {
            return Err(Error::UnknownObservation { name: z.to_string(), position: self.trace.len() });
        }
        let start = Instant::now();
        let deadline = Deadline::after(self.limit, self.trace.len());
        self.trace.push(z);
        if self.rebuild {
            self.unrolled = build_conditioned(m, &self.trace, &self.risk)?;
        } else {
            self.unrolled.extend(m, z, &self.risk)?;
        }
        let risk = match self.engine {
            Engine::ExactPi => {
                let warm = if self.rebuild { None } else { Some(self.policy.as_slice()) };
                let sol = exact_policy_iteration(&self.unrolled, warm, &deadline)?;
                self.policy = sol.policy;
                RiskValue::Exact(sol.value * &self.scale)
            }
            Engine::IntervalVi { epsilon } => {
                // The scaled gap must still meet epsilon after multiplying back.
                let c = to_f64(&self.scale);
                let (lo, hi) = interval_value_iteration(&self.unrolled, epsilon / c * (1.0 - 1e-9), &deadline)?;
                if c == 1.0 {
                    RiskValue::Bounds { lower: lo, upper: hi }
                } else {
                    RiskValue::Bounds { lower: (lo * c).next_down(), upper: (hi * c).next_up() }
                }
            }
        };
        deadline.check()?;
        Ok(StepReport {
            step: self.trace.len(),
            risk,
            beliefs: None,
            dim: None,
            unrolled_states: Some(self.unrolled.num_states()),
            elapsed: start.elapsed(),
        })
    }
}

impl Monitor for UnrollingSession {
    fn feed(&mut self, z: usize) -> Result<StepReport> {
        if self.failure.is_some() {
            return Err(Error::SessionClosed);
        }
        let result = self.advance(z);
        match &result {
            Ok(report) => self.history.push(report.clone()),
            Err(e) => self.failure = Some(e.to_string()),
        }
        result
    }

    fn history(&self) -> &[StepReport] {
        &self.history
    }
}
