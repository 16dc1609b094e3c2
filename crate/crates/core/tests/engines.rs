use std::sync::Arc;

use mdpmon::bench::{corpus, RandomSpec};
use mdpmon::error::Error;
use mdpmon::filtering::{Mode, MonitorSession};
use mdpmon::monitor::{Monitor, RiskValue};
use mdpmon::oracle::dp_trace_risk;
use mdpmon::rational::{to_f64, Rational};
use mdpmon::unrolling::{Engine, UnrollingSession, DEFAULT_EPSILON};
use mdpmon::{Mdp, RiskVector};

fn run(mut mon: impl Monitor, trace: &[usize]) -> Result<RiskValue, Error> {
    let mut last = None;
    for &z in trace {
        last = Some(mon.feed(z)?.risk);
    }
    Ok(last.unwrap())
}

fn exact(v: RiskValue) -> Rational {
    match v {
        RiskValue::Exact(r) => r,
        other => panic!("expected exact value, got {other:?}"),
    }
}

fn filtering(m: &Mdp, r: &RiskVector, trace: &[usize]) -> Result<Rational, Error> {
    let s = MonitorSession::new(Arc::new(m.clone()), r.clone(), Mode::Mdp)?;
    run(s, trace).map(exact)
}

fn unrolling(m: &Mdp, r: &RiskVector, trace: &[usize], engine: Engine) -> Result<RiskValue, Error> {
    run(UnrollingSession::new(m, r, engine)?, trace)
}

#[test]
fn engines_agree_on_random_models() {
    let spec = RandomSpec::default();
    for inst in corpus(60, &spec, 5, 100_000) {
        let (m, r, trace, seed) = (&inst.model, &inst.risk, &inst.trace, inst.seed);
        let ff = filtering(m, r, trace);
        let pi = unrolling(m, r, trace, Engine::ExactPi);
        let dp = dp_trace_risk(m, trace, r);
        match inst.reference {
            None => {
                assert!(matches!(ff, Err(Error::TraceImpossible { .. })), "seed {seed}: {ff:?}");
                assert!(matches!(pi, Err(Error::TraceImpossible { .. })), "seed {seed}: {pi:?}");
                assert!(matches!(dp, Err(Error::TraceImpossible { .. })), "seed {seed}: {dp:?}");
            }
            Some(v) => {
                assert_eq!(ff.unwrap(), v, "filtering, seed {seed}");
                assert_eq!(exact(pi.unwrap()), v, "policy iteration, seed {seed}");
                assert_eq!(dp.unwrap(), v, "dp, seed {seed}");
                let RiskValue::Bounds { lower, upper } =
                    unrolling(m, r, trace, Engine::IntervalVi { epsilon: DEFAULT_EPSILON }).unwrap()
                else {
                    panic!("expected bounds")
                };
                let f = to_f64(&v);
                assert!(lower <= f && f <= upper && upper - lower <= DEFAULT_EPSILON, "seed {seed}: {lower} {f} {upper}");
            }
        }
    }
}

#[test]
fn rebuild_matches_incremental() {
    for inst in corpus(30, &RandomSpec::default(), 5, 100_000) {
        let a = unrolling(&inst.model, &inst.risk, &inst.trace, Engine::ExactPi);
        let b = run(
            UnrollingSession::new(&inst.model, &inst.risk, Engine::ExactPi).unwrap().rebuilding(),
            &inst.trace,
        );
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b, "seed {}", inst.seed),
            (Err(Error::TraceImpossible { at: x }), Err(Error::TraceImpossible { at: y })) => {
                assert_eq!(x, y, "seed {}", inst.seed)
            }
            other => panic!("seed {}: {other:?}", inst.seed),
        }
    }
}
