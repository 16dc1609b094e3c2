use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use mdpmon::bench::{
    gen_airport, gen_blowup, gen_blowup_ext, gen_evade, gen_refuel, render_table, run_bench, run_session, suite_by_name,
    EvadeKind, SensorKind,
};
use mdpmon::compose::compose;
use mdpmon::filtering::{Mode, MonitorSession};
use mdpmon::model_io::{
    parse_model, parse_risk_file, parse_trace, serialize_model, serialize_results, serialize_trace,
    ResultRow, RiskCell, Stat,
};
use mdpmon::monitor::{Monitor, RiskValue};
use mdpmon::oracle::{dp_trace_risk, oracle_trace_risk, DEFAULT_CAP};
use mdpmon::rational::format_rational;
use mdpmon::risk::RiskSpec;
use mdpmon::simulator::{simulate, SimConfig};
use mdpmon::unrolling::{Engine, UnrollingSession, DEFAULT_EPSILON};
use mdpmon::{Error, Mdp, RiskVector};

#[derive(Parser)]
#[command(name = "mdpmon", version, about = "Risk monitors for partially observable MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RiskArgs {
    /// `reach-max(<label>,<H>)` or `reach-min(<label>,<H>)`.
    #[arg(long, conflicts_with = "risk_file")]
    risk: Option<String>,
    /// Explicit vector, one `risk <state> <value>` line per state.
    #[arg(long)]
    risk_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Filter,
    Unroll,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ks,
    Mc,
    Mdp,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Epi,
    Ivi,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
    Rational,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Airport,
    Refuel,
    Evade,
    Blowup,
    BlowupExt,
}

#[derive(Subcommand)]
enum Command {
    /// Feed a trace to a monitor and print one CSV row per observation.
    Monitor {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "filter")]
        method: MethodArg,
        #[command(flatten)]
        risk: RiskArgs,
        /// Filtering estimator.
        #[arg(long, value_enum, default_value = "mdp")]
        mode: ModeArg,
        /// Keep every candidate belief instead of only the hull vertices.
        #[arg(long)]
        no_ch: bool,
        #[arg(long, value_name = "MS")]
        per_step_timeout: Option<u64>,
        /// `rational` prints exact risks.
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[arg(long, value_enum, default_value = "epi")]
        engine: EngineArg,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Rebuild the unrolling from scratch at every step.
        #[arg(long)]
        rebuild: bool,
    },
    /// Exact trace risk by exhaustive scheduler enumeration.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        risk: RiskArgs,
        /// Enumeration budget in visited nodes.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        /// Use the backward dynamic program instead of enumeration.
        #[arg(long)]
        dp: bool,
    },
    /// Sample a trace under the uniform random scheduler.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the sampled states and actions to stderr.
        #[arg(long)]
        emit_path: bool,
    },
    /// Run a benchmark suite and write the per-run CSV.
    Bench {
        #[arg(long, default_value = "desk")]
        suite: String,
        /// Inclusive range `a..b` or a comma-separated list.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
        #[arg(long, default_value_t = 1000)]
        timeout_ms: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated benchmark model.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated family parameters; see the docs for each family.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(path)?)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_risk(m: &Mdp, args: &RiskArgs) -> Result<RiskVector, Error> {
    if let Some(spec) = &args.risk {
        return RiskSpec::parse(spec)?.resolve(m);
    }
    if let Some(path) = &args.risk_file {
        return parse_risk_file(&read(path)?, m);
    }
    m.risk().cloned().ok_or_else(|| Error::InvalidRiskSpec("no --risk or --risk-file and the model has no risk lines".into()))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Monitor { model, trace, method, risk, mode, no_ch, per_step_timeout, emit, engine, epsilon, rebuild } => {
            let m = parse_model(&read(&model)?)?;
            let trace = parse_trace(&read(&trace)?, &m)?;
            let r = load_risk(&m, &risk)?;
            let limit = per_step_timeout.map(Duration::from_millis);
            let (name, mon): (String, Box<dyn Monitor>) = match method {
                MethodArg::Filter => {
                    let mode = match mode {
                        ModeArg::Ks => Mode::Ks,
                        ModeArg::Mc => Mode::Mc,
                        ModeArg::Mdp => Mode::Mdp,
                    };
                    let mut s = MonitorSession::new(Arc::new(m), r, mode)?.with_step_limit(limit);
                    if no_ch {
                        s = s.without_hull();
                    }
                    (if no_ch { "ff-noch" } else { "ff-ch" }.to_string(), Box::new(s))
                }
                MethodArg::Unroll => {
                    let (name, engine) = match engine {
                        EngineArg::Epi => ("unr-epi", Engine::ExactPi),
                        EngineArg::Ivi => ("unr-ivi", Engine::IntervalVi { epsilon }),
                    };
                    let mut s = UnrollingSession::new(&m, &r, engine)?.with_step_limit(limit);
                    if rebuild {
                        s = s.rebuilding();
                    }
                    (name.to_string(), Box::new(s))
                }
            };
            let run = run_session(mon, &trace);
            let mut rows: Vec<ResultRow> = run
                .reports
                .iter()
                .map(|rep| ResultRow {
                    id: rep.step.to_string(),
                    method: name.clone(),
                    trace_len: rep.step,
                    time_ms: rep.elapsed.as_secs_f64() * 1000.0,
                    beliefs: rep.beliefs.map(Stat::single),
                    dim: rep.dim.map(Stat::single),
                    unrolled_states: rep.unrolled_states,
                    risk: match &rep.risk {
                        RiskValue::Exact(v) => RiskCell::Value(v.clone()),
                        RiskValue::Bounds { lower, upper } => RiskCell::Interval(*lower, *upper),
                    },
                })
                .collect();
            if let Some(e) = &run.stopped {
                let step = run.reports.len() + 1;
                rows.push(ResultRow {
                    id: step.to_string(),
                    method: name,
                    trace_len: step,
                    time_ms: 0.0,
                    beliefs: None,
                    dim: None,
                    unrolled_states: None,
                    risk: match e {
                        Error::Timeout { .. } => RiskCell::Timeout,
                        Error::TraceImpossible { .. } => RiskCell::Impossible,
                        other => RiskCell::Failed(other.to_string()),
                    },
                });
            }
            print!("{}", serialize_results(&rows, matches!(emit, Emit::Rational)));
            match run.stopped {
                Some(Error::Timeout { .. }) | None => Ok(()),
                Some(e) => Err(e),
            }
        }
        Command::Oracle { model, trace, risk, cap, dp } => {
            let m = parse_model(&read(&model)?)?;
            let trace = parse_trace(&read(&trace)?, &m)?;
            let r = load_risk(&m, &risk)?;
            let v = if dp { dp_trace_risk(&m, &trace, &r)? } else { oracle_trace_risk(&m, &trace, &r, cap)? };
            println!("{}", format_rational(&v));
            Ok(())
        }
        Command::Simulate { model, seed, length, out, emit_path } => {
            let m = parse_model(&read(&model)?)?;
            let run = simulate(&m, SimConfig { seed, length })?;
            if emit_path {
                for (i, &s) in run.states.iter().enumerate() {
                    match run.actions.get(i) {
                        Some(&a) => eprintln!("{} {}", m.state_name(s), m.action_name(a)),
                        None => eprintln!("{}", m.state_name(s)),
                    }
                }
            }
            write_out(out.as_deref(), &serialize_trace(&run.trace, &m))
        }
        Command::Bench { suite, seeds, max_len, timeout_ms, out } => {
            let suite = suite_by_name(&suite)?;
            let seeds = parse_seeds(&seeds)?;
            let limit = (timeout_ms > 0).then(|| Duration::from_millis(timeout_ms));
            let rows = run_bench(&suite, &seeds, max_len, limit)?;
            eprint!("{}", render_table(&rows));
            write_out(out.as_deref(), &serialize_results(&rows, false))
        }
        Command::Generate { family, params, out } => {
            let m = generate(family, &params)?;
            write_out(out.as_deref(), &serialize_model(&m))
        }
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Unsupported(format!("cannot read seeds `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn generate(family: Family, params: &str) -> Result<Mdp, Error> {
    let parts: Vec<&str> = params.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let bad = |what: &str| Error::Unsupported(format!("bad parameters `{params}`: expected {what}"));
    let num = |i: usize, default: usize, what: &str| -> Result<usize, Error> {
        parts.get(i).map_or(Ok(default), |s| s.parse().map_err(|_| bad(what)))
    };
    let sensor = |i: usize| match parts.get(i).copied() {
        None | Some("A") => Ok(SensorKind::A),
        Some("B") => Ok(SensorKind::B),
        Some(_) => Err(bad("sensor kind A or B")),
    };
    match family {
        Family::Airport => {
            let what = "lanes,res[,A|B[,alt]]";
            let altimeter = match parts.get(3).copied() {
                None => false,
                Some("alt") => true,
                Some(_) => return Err(bad(what)),
            };
            let (w, s) = gen_airport(num(0, 3, what)?.max(3), num(1, 3, what)?.max(3), sensor(2)?, altimeter)?;
            compose(&w, &s)
        }
        Family::Refuel => {
            let what = "D,capacity[,A|B]";
            gen_refuel(num(0, 4, what)?.max(3), num(1, 6, what)?.max(1), sensor(2)?)
        }
        Family::Evade => {
            let what = "D,I|V[,view]";
            let kind = match parts.get(1).copied() {
                None | Some("I") => EvadeKind::I,
                Some("V") => EvadeKind::V,
                Some(_) => return Err(bad(what)),
            };
            let view = parts.get(2).map(|s| s.parse().map_err(|_| bad(what))).transpose()?;
            gen_evade(num(0, 4, what)?.max(3), kind, view)
        }
        Family::Blowup => gen_blowup(num(0, 3, "n")?.max(1)),
        Family::BlowupExt => gen_blowup_ext(num(0, 3, "n")?.max(1)),
    }
}
