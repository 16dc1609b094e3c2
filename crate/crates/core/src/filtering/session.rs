use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::monitor::{Monitor, RiskValue, StepReport};
use crate::risk::RiskVector;

use super::{hull_reduce, ks_risk, ks_step, mc_step, mdp_risk, mdp_step, support_of, weighted_risk, Belief};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Ks,
    Mc,
    Mdp,
}

enum State {
    Init,
    Support(BTreeSet<usize>),
    Belief(Belief),
    Vertices(Vec<Belief>),
}

/// Sequential monitor: one [`MonitorSession::feed`] per observation. After
/// any error the session stays readable but refuses further input.
pub struct MonitorSession {
    model: Arc<Mdp>,
    risk: RiskVector,
    mode: Mode,
    hull: bool,
    limit: Option<Duration>,
    state: State,
    steps: usize,
    failure: Option<String>,
    history: Vec<StepReport>,
}

impl MonitorSession {
    pub fn new(model: Arc<Mdp>, risk: RiskVector, mode: Mode) -> Result<Self> {
        model.require_state_observations()?;
        if mode == Mode::Mc && (0..model.num_states()).any(|s| model.choices(s).len() > 1) {
            return Err(Error::Unsupported("chain mode needs one action per state".into()));
        }
        if risk.len() != model.num_states() {
            return Err(Error::InvalidRiskSpec(format!(
                "risk vector has {} entries, model has {} states",
                risk.len(),
                model.num_states()
            )));
        }
        Ok(MonitorSession {
            model,
            risk,
            mode,
            hull: true,
            limit: None,
            state: State::Init,
            steps: 0,
            failure: None,
            history: Vec::new(),
        })
    }

    /// Keeps every generated belief instead of only the vertices.
    pub fn without_hull(mut self) -> Self {
        self.hull = false;
        self
    }

    pub fn with_step_limit(mut self, limit: Option<Duration>) -> Self {
        self.limit = limit;
        self
    }

    pub fn model(&self) -> &Mdp {
        &self.model
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_dead(&self) -> bool {
        self.failure.is_some()
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    pub fn support(&self) -> Option<&BTreeSet<usize>> {
        match &self.state {
            State::Support(s) => Some(s),
            _ => None,
        }
    }

    pub fn belief(&self) -> Option<&Belief> {
        match &self.state {
            State::Belief(b) => Some(b),
            _ => None,
        }
    }

    pub fn vertices(&self) -> Option<&[Belief]> {
        match &self.state {
            State::Vertices(v) => Some(v),
            _ => None,
        }
    }

    fn feed_inner(&mut self, z: usize) -> Result<StepReport> {
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

    fn advance(&mut self, z: usize) -> Result<StepReport> {
        if z >= self.model.num_observations() {
            return Err(Error::UnknownObservation { name: z.to_string(), position: self.steps });
        }
        let start = Instant::now();
        let position = self.steps;
        let deadline = Deadline::after(self.limit, position);
        let impossible = Error::TraceImpossible { at: Some(position) };
        let m = &*self.model;
        let (next, risk, beliefs, dim) = match self.mode {
            Mode::Ks => {
                let prev = match &self.state {
                    State::Support(s) => Some(s),
                    _ => None,
                };
                let set = ks_step(m, prev, z);
                let risk = ks_risk(&set, &self.risk).map_err(|_| impossible)?;
                let dim = set.len();
                (State::Support(set), risk, None, dim)
            }
            Mode::Mc => {
                let prev = match &self.state {
                    State::Belief(b) => Some(b),
                    _ => None,
                };
                let bel = mc_step(m, prev, z).ok_or(impossible)?;
                let risk = weighted_risk(&bel, &self.risk);
                let dim = bel.len();
                (State::Belief(bel), risk, Some(1), dim)
            }
            Mode::Mdp => {
                let prev = match &self.state {
                    State::Vertices(v) => Some(v.as_slice()),
                    _ => None,
                };
                let candidates = mdp_step(m, prev, z, &deadline)?;
                if candidates.is_empty() {
                    return Err(impossible);
                }
                let vertices = if self.hull { hull_reduce(&candidates, &deadline)? } else { candidates };
                let risk = mdp_risk(&vertices, &self.risk)?;
                let dim = support_of(&vertices).len();
                let count = vertices.len();
                (State::Vertices(vertices), risk, Some(count), dim)
            }
        };
        deadline.check()?;
        self.state = next;
        self.steps += 1;
        Ok(StepReport {
            step: self.steps,
            risk: RiskValue::Exact(risk),
            beliefs,
            dim: Some(dim),
            unrolled_states: None,
            elapsed: start.elapsed(),
        })
    }
}

impl Monitor for MonitorSession {
    fn feed(&mut self, z: usize) -> Result<StepReport> {
        self.feed_inner(z)
    }

    fn history(&self) -> &[StepReport] {
        &self.history
    }
}
