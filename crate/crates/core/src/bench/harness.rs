//! Runs monitors over simulated traces and aggregates per-step statistics.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Duration;

use crate::compose::compose;
use crate::error::{Error, Result};
use crate::filtering::{Mode, MonitorSession};
use crate::mdp::Mdp;
use crate::model_io::{ResultRow, RiskCell, Stat};
use crate::monitor::{Monitor, RiskValue, StepReport};
use crate::risk::{ReachMode, RiskSpec, RiskVector};
use crate::simulator::{simulate, SimConfig};
use crate::unrolling::{Engine, UnrollingSession, DEFAULT_EPSILON};

use super::airport::{gen_airport, SensorKind, CRASH as AIRPORT_CRASH};
use super::evade::{gen_evade, EvadeKind, CRASH as EVADE_CRASH};
use super::refuel::{gen_refuel, EMPTY};

pub type BenchRow = ResultRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Forward filtering with hull reduction.
    FfCh,
    /// Forward filtering keeping every candidate belief.
    FfNoCh,
    UnrEpi,
    UnrIvi,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::FfCh, Method::FfNoCh, Method::UnrEpi, Method::UnrIvi];

    pub fn name(self) -> &'static str {
        match self {
            Method::FfCh => "ff-ch",
            Method::FfNoCh => "ff-noch",
            Method::UnrEpi => "unr-epi",
            Method::UnrIvi => "unr-ivi",
        }
    }

    pub fn monitor(self, m: &Arc<Mdp>, r: &RiskVector, step_limit: Option<Duration>) -> Result<Box<dyn Monitor>> {
        Ok(match self {
            Method::FfCh => Box::new(MonitorSession::new(m.clone(), r.clone(), Mode::Mdp)?.with_step_limit(step_limit)),
            Method::FfNoCh => {
                Box::new(MonitorSession::new(m.clone(), r.clone(), Mode::Mdp)?.without_hull().with_step_limit(step_limit))
            }
            Method::UnrEpi => Box::new(UnrollingSession::new(m, r, Engine::ExactPi)?.with_step_limit(step_limit)),
            Method::UnrIvi => Box::new(
                UnrollingSession::new(m, r, Engine::IntervalVi { epsilon: DEFAULT_EPSILON })?.with_step_limit(step_limit),
            ),
        })
    }
}

pub struct BenchModel {
    pub id: String,
    pub model: Arc<Mdp>,
    pub risk: RiskVector,
    /// How the risk was defined, for the rendered table.
    pub risk_note: String,
}

impl BenchModel {
    pub fn from_spec(id: &str, model: Mdp, spec: &str) -> Result<Self> {
        let risk = RiskSpec::parse(spec)?.resolve(&model)?;
        Ok(BenchModel { id: id.to_string(), model: Arc::new(model), risk, risk_note: spec.to_string() })
    }
}

pub struct Suite {
    pub name: String,
    pub models: Vec<BenchModel>,
    pub methods: Vec<Method>,
}

/// Desk-scale analogues of the airport, refuel and evade instances. All
/// risks maximize over schedulers: the monitor must be conservative.
pub fn desk_suite() -> Result<Suite> {
    let airport = |lanes, res, kind| -> Result<Mdp> {
        let (w, s) = gen_airport(lanes, res, kind, true)?;
        compose(&w, &s)
    };
    let reach = |label: &str, h: usize| format!("{}({label},{h})", reach_name(ReachMode::Max));
    let models = vec![
        BenchModel::from_spec("airport-A", airport(5, 30, SensorKind::A)?, &reach(AIRPORT_CRASH, 8))?,
        BenchModel::from_spec("airport-B", airport(5, 30, SensorKind::B)?, &reach(AIRPORT_CRASH, 8))?,
        BenchModel::from_spec("refuel-A", gen_refuel(4, 10, SensorKind::A)?, &reach(EMPTY, 3))?,
        BenchModel::from_spec("refuel-B", gen_refuel(4, 10, SensorKind::B)?, &reach(EMPTY, 3))?,
        BenchModel::from_spec("evade-I", gen_evade(4, EvadeKind::I, None)?, &reach(EVADE_CRASH, 2))?,
        BenchModel::from_spec("evade-V", gen_evade(4, EvadeKind::V, Some(2))?, &reach(EVADE_CRASH, 2))?,
    ];
    Ok(Suite { name: "desk".to_string(), models, methods: Method::ALL.to_vec() })
}

fn reach_name(mode: ReachMode) -> &'static str {
    match mode {
        ReachMode::Max => "reach-max",
        ReachMode::Min => "reach-min",
    }
}

pub fn suite_by_name(name: &str) -> Result<Suite> {
    match name {
        "desk" => desk_suite(),
        other => Err(Error::Unsupported(format!("unknown suite `{other}`"))),
    }
}

/// Outcome of one monitor over one trace.
pub struct SessionRun {
    pub reports: Vec<StepReport>,
    /// Set when the run stopped early; `Timeout` is the common case.
    pub stopped: Option<Error>,
}

pub fn run_session(mut mon: Box<dyn Monitor>, trace: &[usize]) -> SessionRun {
    for &z in trace {
        if let Err(e) = mon.feed(z) {
            return SessionRun { reports: mon.history().to_vec(), stopped: Some(e) };
        }
    }
    SessionRun { reports: mon.history().to_vec(), stopped: None }
}

fn summarize(id: String, method: Method, run: &SessionRun) -> BenchRow {
    let counts = |f: fn(&StepReport) -> Option<usize>| -> Option<Stat> {
        let v: Vec<usize> = run.reports.iter().filter_map(f).collect();
        Stat::from_counts(&v)
    };
    let risk = match (&run.stopped, run.reports.last()) {
        (Some(Error::Timeout { .. }), _) => RiskCell::Timeout,
        (Some(Error::TraceImpossible { .. }), _) => RiskCell::Impossible,
        (Some(e), _) => RiskCell::Failed(e.to_string()),
        (None, Some(last)) => match &last.risk {
            RiskValue::Exact(v) => RiskCell::Value(v.clone()),
            RiskValue::Bounds { lower, upper } => RiskCell::Interval(*lower, *upper),
        },
        (None, None) => RiskCell::Failed("empty trace".to_string()),
    };
    BenchRow {
        id,
        method: method.name().to_string(),
        trace_len: run.reports.len(),
        time_ms: run.reports.iter().map(|r| r.elapsed.as_secs_f64() * 1000.0).sum(),
        beliefs: counts(|r| r.beliefs),
        dim: counts(|r| r.dim),
        unrolled_states: run.reports.iter().filter_map(|r| r.unrolled_states).max(),
        risk,
    }
}

/// One row per (model, seed, method), in that nesting order. Each trace is
/// simulated with the seed; a run stops at the first step that exceeds the
/// per-step limit.
pub fn run_bench(suite: &Suite, seeds: &[u64], max_len: usize, step_limit: Option<Duration>) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for bm in &suite.models {
        for &seed in seeds {
            let trace = simulate(&bm.model, SimConfig { seed, length: max_len })?.trace;
            for &method in &suite.methods {
                let run = run_session(method.monitor(&bm.model, &bm.risk, step_limit)?, &trace);
                rows.push(summarize(format!("{}#{seed}", bm.id), method, &run));
            }
        }
    }
    Ok(rows)
}

/// Per (model, method): completed runs, per-step time, beliefs, dimension
/// and unrolled size, aligned in columns.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut groups: Vec<(String, String, Vec<&BenchRow>)> = Vec::new();
    for row in rows {
        let model = row.id.split('#').next().unwrap_or(&row.id).to_string();
        match groups.iter_mut().find(|(m, meth, _)| *m == model && *meth == row.method) {
            Some(g) => g.2.push(row),
            None => groups.push((model, row.method.clone(), vec![row])),
        }
    }
    let header = ["model", "method", "N", "runs", "ms_avg", "ms_max", "B_avg", "B_max", "D_avg", "D_max", "S_u_max"];
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for (model, method, rs) in &groups {
        let done: Vec<&&BenchRow> = rs.iter().filter(|r| !r.timed_out()).collect();
        let per_step: Vec<f64> = done.iter().filter(|r| r.trace_len > 0).map(|r| r.time_ms / r.trace_len as f64).collect();
        let avg = |v: &[f64]| if v.is_empty() { String::new() } else { format!("{:.2}", v.iter().sum::<f64>() / v.len() as f64) };
        let max_f = |v: &[f64]| v.iter().cloned().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        let stat = |f: fn(&BenchRow) -> Option<Stat>| -> (String, String) {
            let s: Vec<Stat> = done.iter().filter_map(|r| f(r)).collect();
            if s.is_empty() {
                return (String::new(), String::new());
            }
            let a = s.iter().map(|s| s.avg).sum::<f64>() / s.len() as f64;
            (format!("{a:.1}"), s.iter().map(|s| s.max).max().unwrap_or(0).to_string())
        };
        let (b_avg, b_max) = stat(|r| r.beliefs);
        let (d_avg, d_max) = stat(|r| r.dim);
        let su = done.iter().filter_map(|r| r.unrolled_states).max().map(|v| v.to_string()).unwrap_or_default();
        table.push(vec![
            model.clone(),
            method.clone(),
            done.len().to_string(),
            rs.len().to_string(),
            avg(&per_step),
            max_f(&per_step).map(|v| format!("{v:.2}")).unwrap_or_default(),
            b_avg,
            b_max,
            d_avg,
            d_max,
            su,
        ]);
    }
    let widths: Vec<usize> = (0..header.len()).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c < 2 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
