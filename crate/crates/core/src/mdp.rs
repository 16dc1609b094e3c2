//! Finite MDPs with (possibly stochastic) observations.
//!
//! States, actions and observations are dense integer ids assigned in
//! declaration order; their names live in side tables. Observations are
//! either attached to states, or (for sensor models) to state-action pairs.
//! A model with neither is fully observable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::risk::RiskVector;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Choice {
    pub action: usize,
    pub succ: Dist,
    /// State-action observation, present only in sensor-style models.
    pub obs: Option<Dist>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mdp {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    init: Dist,
    choices: Vec<Vec<Choice>>,
    obs: Vec<Option<Dist>>,
    labels: BTreeMap<String, BTreeSet<usize>>,
    risk: Option<RiskVector>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservationKind {
    /// No observation function: the state itself is visible.
    Full,
    State,
    StateAction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    KripkeStructure,
    MarkovChain,
    GeneralMdp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObsDeterminism {
    DeterministicObs,
    StochasticObs,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    NoStates,
    NonStochasticInit { sum: Rational },
    NoAction { state: String },
    NonStochasticRow { state: String, action: String, sum: Rational },
    NegativeProbability { context: String },
    MissingObservation { state: String },
    NonStochasticObs { state: String, sum: Rational },
    MissingActionObservation { state: String, action: String },
    NonStochasticActionObs { state: String, action: String, sum: Rational },
    NegativeRisk { state: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoStates => write!(f, "NoStates"),
            Diagnostic::NonStochasticInit { sum } => {
                write!(f, "NonStochasticInit(sum={})", format_rational(sum))
            }
            Diagnostic::NoAction { state } => write!(f, "NoAction({state})"),
            Diagnostic::NonStochasticRow { state, action, sum } => {
                write!(f, "NonStochasticRow({state},{action}; sum={})", format_rational(sum))
            }
            Diagnostic::NegativeProbability { context } => write!(f, "NegativeProbability({context})"),
            Diagnostic::MissingObservation { state } => write!(f, "MissingObservation({state})"),
            Diagnostic::NonStochasticObs { state, sum } => {
                write!(f, "NonStochasticObs({state}; sum={})", format_rational(sum))
            }
            Diagnostic::MissingActionObservation { state, action } => {
                write!(f, "MissingActionObservation({state},{action})")
            }
            Diagnostic::NonStochasticActionObs { state, action, sum } => {
                write!(f, "NonStochasticActionObs({state},{action}; sum={})", format_rational(sum))
            }
            Diagnostic::NegativeRisk { state } => write!(f, "NegativeRisk({state})"),
        }
    }
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn observation_name(&self, z: usize) -> &str {
        &self.observations[z]
    }

    pub fn observation_names(&self) -> &[String] {
        &self.observations
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }

    pub fn observation_id(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|s| s == name)
    }

    pub fn init(&self) -> &Dist {
        &self.init
    }

    pub fn choices(&self, s: usize) -> &[Choice] {
        &self.choices[s]
    }

    /// State observation distribution. Panics on models without state
    /// observations; use [`Mdp::state_obs`] when unsure.
    pub fn obs(&self, s: usize) -> &Dist {
        self.obs[s].as_ref().expect("state has no observation distribution")
    }

    pub fn state_obs(&self, s: usize) -> Option<&Dist> {
        self.obs[s].as_ref()
    }

    /// `obs(s)(z)` without allocating.
    pub fn obs_prob(&self, s: usize, z: usize) -> Option<&Rational> {
        self.obs[s].as_ref().and_then(|d| d.get_ref(z))
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.labels.get(name)
    }

    pub fn risk(&self) -> Option<&RiskVector> {
        self.risk.as_ref()
    }

    pub fn with_risk(mut self, risk: RiskVector) -> Self {
        self.risk = Some(risk);
        self
    }

    pub fn without_risk(mut self) -> Self {
        self.risk = None;
        self
    }

    pub fn num_transitions(&self) -> usize {
        self.choices.iter().flatten().map(|c| c.succ.len()).sum()
    }

    pub fn observation_kind(&self) -> ObservationKind {
        if self.choices.iter().flatten().any(|c| c.obs.is_some()) {
            ObservationKind::StateAction
        } else if self.obs.iter().any(Option::is_some) {
            ObservationKind::State
        } else {
            ObservationKind::Full
        }
    }

    /// Fails unless every state carries an observation distribution.
    pub fn require_state_observations(&self) -> Result<()> {
        match self.observation_kind() {
            ObservationKind::State => Ok(()),
            ObservationKind::Full => Err(Error::Unsupported(
                "model has no observation function".to_string(),
            )),
            ObservationKind::StateAction => Err(Error::Unsupported(
                "model uses state-action observations; lift it first".to_string(),
            )),
        }
    }

    /// Keeps only the choices whose action name satisfies `keep`. States
    /// where nothing matches keep all their choices.
    pub fn restrict_actions(&self, keep: impl Fn(&str) -> bool) -> Mdp {
        let mut out = self.clone();
        for row in &mut out.choices {
            let kept: Vec<Choice> = row
                .iter()
                .filter(|c| keep(&self.actions[c.action]))
                .cloned()
                .collect();
            if !kept.is_empty() {
                *row = kept;
            }
        }
        out
    }

    pub(crate) fn from_parts(parts: MdpParts) -> Mdp {
        Mdp {
            states: parts.states,
            actions: parts.actions,
            observations: parts.observations,
            init: parts.init,
            choices: parts.choices,
            obs: parts.obs,
            labels: parts.labels,
            risk: parts.risk,
        }
    }

    pub(crate) fn into_parts(self) -> MdpParts {
        MdpParts {
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            init: self.init,
            choices: self.choices,
            obs: self.obs,
            labels: self.labels,
            risk: self.risk,
        }
    }
}

pub(crate) struct MdpParts {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub init: Dist,
    pub choices: Vec<Vec<Choice>>,
    pub obs: Vec<Option<Dist>>,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    pub risk: Option<RiskVector>,
}

fn check_dist(dist: &Dist, context: impl Fn() -> String, diags: &mut Vec<Diagnostic>) -> bool {
    if dist.iter().any(|(_, p)| p.is_negative()) {
        diags.push(Diagnostic::NegativeProbability { context: context() });
        return false;
    }
    dist.total().is_one()
}

/// Checks every structural invariant; an empty list means the model is valid.
pub fn validate(m: &Mdp) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if m.states.is_empty() {
        diags.push(Diagnostic::NoStates);
        return diags;
    }
    if !check_dist(&m.init, || "init".to_string(), &mut diags) {
        diags.push(Diagnostic::NonStochasticInit { sum: m.init.total() });
    }
    let kind = m.observation_kind();
    for (s, row) in m.choices.iter().enumerate() {
        let state = || m.states[s].clone();
        if row.is_empty() {
            diags.push(Diagnostic::NoAction { state: state() });
        }
        for c in row {
            let action = || m.actions[c.action].clone();
            if !check_dist(&c.succ, || format!("{},{}", state(), action()), &mut diags) {
                diags.push(Diagnostic::NonStochasticRow {
                    state: state(),
                    action: action(),
                    sum: c.succ.total(),
                });
            }
            if kind == ObservationKind::StateAction {
                match &c.obs {
                    None => diags.push(Diagnostic::MissingActionObservation {
                        state: state(),
                        action: action(),
                    }),
                    Some(d) => {
                        if !check_dist(d, || format!("sobs {},{}", state(), action()), &mut diags) {
                            diags.push(Diagnostic::NonStochasticActionObs {
                                state: state(),
                                action: action(),
                                sum: d.total(),
                            });
                        }
                    }
                }
            }
        }
        match (&m.obs[s], kind) {
            (None, ObservationKind::State) => diags.push(Diagnostic::MissingObservation { state: state() }),
            (Some(d), _) => {
                if !check_dist(d, || format!("obs {}", state()), &mut diags) {
                    diags.push(Diagnostic::NonStochasticObs { state: state(), sum: d.total() });
                }
            }
            _ => {}
        }
    }
    if let Some(risk) = &m.risk {
        for (s, v) in risk.values().iter().enumerate() {
            if v.is_negative() {
                diags.push(Diagnostic::NegativeRisk { state: m.states[s].clone() });
            }
        }
    }
    diags
}

pub fn classify(m: &Mdp) -> (Structure, ObsDeterminism) {
    let obs_dirac = m.obs.iter().flatten().all(Dist::is_dirac)
        && m.choices.iter().flatten().filter_map(|c| c.obs.as_ref()).all(Dist::is_dirac);
    let trans_dirac = m.init.is_dirac() && m.choices.iter().flatten().all(|c| c.succ.is_dirac());
    let structure = if trans_dirac && obs_dirac {
        Structure::KripkeStructure
    } else if m.choices.iter().all(|row| row.len() == 1) {
        Structure::MarkovChain
    } else {
        Structure::GeneralMdp
    };
    let obs = if obs_dirac {
        ObsDeterminism::DeterministicObs
    } else {
        ObsDeterminism::StochasticObs
    };
    (structure, obs)
}

/// Incremental construction by name. Probabilities for repeated entries are
/// summed; nothing is normalized.
#[derive(Default, Debug, Clone)]
pub struct MdpBuilder {
    states: Vec<String>,
    state_ids: HashMap<String, usize>,
    actions: Vec<String>,
    action_ids: HashMap<String, usize>,
    observations: Vec<String>,
    observation_ids: HashMap<String, usize>,
    init: Vec<(usize, Rational)>,
    choices: Vec<Vec<(usize, Vec<(usize, Rational)>, Option<Vec<(usize, Rational)>>)>>,
    obs: Vec<Option<Vec<(usize, Rational)>>>,
    labels: BTreeMap<String, BTreeSet<usize>>,
    risk: Vec<Option<Rational>>,
}

impl MdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: &str) -> usize {
        if let Some(&id) = self.state_ids.get(name) {
            return id;
        }
        let id = self.states.len();
        self.states.push(name.to_string());
        self.state_ids.insert(name.to_string(), id);
        self.choices.push(Vec::new());
        self.obs.push(None);
        self.risk.push(None);
        id
    }

    pub fn has_state(&self, name: &str) -> bool {
        self.state_ids.contains_key(name)
    }

    pub fn action(&mut self, name: &str) -> usize {
        if let Some(&id) = self.action_ids.get(name) {
            return id;
        }
        let id = self.actions.len();
        self.actions.push(name.to_string());
        self.action_ids.insert(name.to_string(), id);
        id
    }

    pub fn observation(&mut self, name: &str) -> usize {
        if let Some(&id) = self.observation_ids.get(name) {
            return id;
        }
        let id = self.observations.len();
        self.observations.push(name.to_string());
        self.observation_ids.insert(name.to_string(), id);
        id
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn init(&mut self, s: usize, p: Rational) -> &mut Self {
        self.init.push((s, p));
        self
    }

    fn choice_mut(
        &mut self,
        s: usize,
        a: usize,
    ) -> &mut (usize, Vec<(usize, Rational)>, Option<Vec<(usize, Rational)>>) {
        let row = &mut self.choices[s];
        let pos = match row.iter().position(|(act, _, _)| *act == a) {
            Some(pos) => pos,
            None => {
                row.push((a, Vec::new(), None));
                row.len() - 1
            }
        };
        &mut row[pos]
    }

    /// Declares `a` available at `s` without adding any transition.
    pub fn enable(&mut self, s: usize, a: usize) -> &mut Self {
        self.choice_mut(s, a);
        self
    }

    pub fn trans(&mut self, s: usize, a: usize, t: usize, p: Rational) -> &mut Self {
        self.choice_mut(s, a).1.push((t, p));
        self
    }

    pub fn obs(&mut self, s: usize, z: usize, p: Rational) -> &mut Self {
        self.obs[s].get_or_insert_with(Vec::new).push((z, p));
        self
    }

    pub fn sobs(&mut self, s: usize, a: usize, z: usize, p: Rational) -> &mut Self {
        self.choice_mut(s, a).2.get_or_insert_with(Vec::new).push((z, p));
        self
    }

    pub fn label(&mut self, name: &str, s: usize) -> &mut Self {
        self.labels.entry(name.to_string()).or_default().insert(s);
        self
    }

    pub fn declare_label(&mut self, name: &str) -> &mut Self {
        self.labels.entry(name.to_string()).or_default();
        self
    }

    pub fn risk(&mut self, s: usize, v: Rational) -> &mut Self {
        self.risk[s] = Some(v);
        self
    }

    /// Builds without validating.
    pub fn build_unchecked(self) -> Mdp {
        let n = self.states.len();
        let has_risk = self.risk.iter().any(Option::is_some);
        let risk = has_risk.then(|| {
            RiskVector::new(self.risk.into_iter().map(|v| v.unwrap_or_else(Rational::zero)).collect())
        });
        let choices = self
            .choices
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|(action, succ, obs)| Choice {
                        action,
                        succ: Dist::from_entries(succ),
                        obs: obs.map(Dist::from_entries),
                    })
                    .collect()
            })
            .collect();
        let mdp = Mdp {
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            init: Dist::from_entries(self.init),
            choices,
            obs: self.obs.into_iter().map(|o| o.map(Dist::from_entries)).collect(),
            labels: self.labels,
            risk,
        };
        debug_assert_eq!(mdp.num_states(), n);
        mdp
    }

    pub fn build(self) -> Result<Mdp> {
        let mdp = self.build_unchecked();
        let diags = validate(&mdp);
        if diags.is_empty() {
            Ok(mdp)
        } else {
            Err(Error::Validation(diags))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, one};

    fn single_state() -> MdpBuilder {
        let mut b = MdpBuilder::new();
        let s = b.state("s");
        let a = b.action("a");
        let z = b.observation("z");
        b.init(s, one()).trans(s, a, s, one()).obs(s, z, one());
        b
    }

    #[test]
    fn minimal_model_is_valid() {
        let m = single_state().build().unwrap();
        assert!(validate(&m).is_empty());
        assert_eq!(classify(&m), (Structure::KripkeStructure, ObsDeterminism::DeterministicObs));
    }

    #[test]
    fn non_stochastic_row_is_reported() {
        let mut b = MdpBuilder::new();
        let s = b.state("s");
        let a = b.action("a");
        let z = b.observation("z");
        b.init(s, one()).trans(s, a, s, frac(9, 10)).obs(s, z, one());
        let m = b.build_unchecked();
        assert_eq!(
            validate(&m),
            vec![Diagnostic::NonStochasticRow { state: "s".into(), action: "a".into(), sum: frac(9, 10) }]
        );
    }

    #[test]
    fn state_without_action_is_reported() {
        let mut b = single_state();
        let t = b.state("t");
        let z = b.observation("z");
        b.obs(t, z, one());
        let m = b.build_unchecked();
        assert_eq!(validate(&m), vec![Diagnostic::NoAction { state: "t".into() }]);
    }

    #[test]
    fn missing_observation_is_an_error() {
        let mut b = single_state();
        let t = b.state("t");
        let a = b.action("a");
        b.trans(t, a, t, one());
        let m = b.build_unchecked();
        assert_eq!(validate(&m), vec![Diagnostic::MissingObservation { state: "t".into() }]);
    }

    #[test]
    fn markov_chain_and_stochastic_obs() {
        let mut b = MdpBuilder::new();
        let s = b.state("s");
        let t = b.state("t");
        let a = b.action("a");
        let z0 = b.observation("z0");
        let z1 = b.observation("z1");
        b.init(s, one());
        b.trans(s, a, s, frac(1, 2)).trans(s, a, t, frac(1, 2));
        b.trans(t, a, t, one());
        b.obs(s, z0, one()).obs(t, z0, frac(1, 3)).obs(t, z1, frac(2, 3));
        let m = b.build().unwrap();
        assert_eq!(classify(&m), (Structure::MarkovChain, ObsDeterminism::StochasticObs));
    }

    #[test]
    fn restrict_keeps_all_when_nothing_matches() {
        let mut b = MdpBuilder::new();
        let s = b.state("s");
        let p = b.action("p");
        let w = b.action("w");
        let z = b.observation("z");
        b.init(s, one()).trans(s, p, s, one()).trans(s, w, s, one()).obs(s, z, one());
        let m = b.build().unwrap();
        assert_eq!(m.restrict_actions(|a| a == "p").choices(s).len(), 1);
        assert_eq!(m.restrict_actions(|a| a == "x").choices(s).len(), 2);
    }
}
