use std::sync::Arc;

use mdpmon::bench::{
    airport_world, gen_airport, gen_blowup, gen_blowup_ext, gen_evade, gen_refuel, labels, run_bench, BenchModel,
    EvadeKind, Method, SensorKind, Suite,
};
use mdpmon::compose::compose;
use mdpmon::filtering::{Mode, MonitorSession};
use mdpmon::mdp::{classify, validate, ObsDeterminism, Structure};
use mdpmon::model_io::{parse_model, serialize_model, serialize_results_untimed, RiskCell};
use mdpmon::monitor::Monitor;
use mdpmon::rational::frac;
use mdpmon::risk::RiskSpec;
use mdpmon::simulator::{simulate, SimConfig};
use mdpmon::Mdp;

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Compares against a file in models/; `MDPMON_BLESS=1` rewrites it instead.
fn check_golden(name: &str, text: &str) {
    assert_eq!(serialize_model(&parse_model(text).unwrap()), text, "{name} does not round-trip");
    if std::env::var_os("MDPMON_BLESS").is_some() {
        std::fs::write(format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR")), text).unwrap();
    }
    assert_eq!(text, golden(name), "{name} is stale; rerun with MDPMON_BLESS=1 after checking the diff");
}

fn general_stochastic(m: &Mdp) {
    assert!(validate(m).is_empty(), "{:?}", validate(m));
    assert_eq!(classify(m), (Structure::GeneralMdp, ObsDeterminism::StochasticObs));
}

#[test]
fn generated_models_are_general_with_noisy_observations() {
    for kind in [SensorKind::A, SensorKind::B] {
        for alt in [false, true] {
            let (w, s) = gen_airport(4, 5, kind, alt).unwrap();
            general_stochastic(&compose(&w, &s).unwrap());
        }
        general_stochastic(&gen_refuel(4, 5, kind).unwrap());
    }
    general_stochastic(&gen_evade(4, EvadeKind::V, Some(2)).unwrap());
    general_stochastic(&gen_evade(4, EvadeKind::I, Some(2)).unwrap());
    // With the other robot always in view, observations are exact.
    let full = gen_evade(4, EvadeKind::I, None).unwrap();
    assert_eq!(classify(&full), (Structure::GeneralMdp, ObsDeterminism::DeterministicObs));
    for m in [gen_blowup(3).unwrap(), gen_blowup_ext(3).unwrap()] {
        assert!(validate(&m).is_empty());
    }
}

#[test]
fn reference_airport_matches_golden_files() {
    let (w, s) = gen_airport(3, 3, SensorKind::A, false).unwrap();
    check_golden("airport_world_3x3.mdp", &serialize_model(&w));
    check_golden("airport_sensor_3x3_A.mdp", &serialize_model(&s));
    let joint = compose(&w, &s).unwrap();
    check_golden("airport_3x3_A.mdp", &serialize_model(&joint));
    assert_eq!(serialize_model(&parse_model(&golden("airport_3x3_A.mdp")).unwrap()), golden("airport_3x3_A.mdp"));
}

#[test]
fn other_golden_models_are_current() {
    check_golden("refuel_4_5_A.mdp", &serialize_model(&gen_refuel(4, 5, SensorKind::A).unwrap()));
    check_golden("blowup_3.mdp", &serialize_model(&gen_blowup(3).unwrap()));
    check_golden("blowup_ext_3.mdp", &serialize_model(&gen_blowup_ext(3).unwrap()));
}

#[test]
fn reference_airport_per_step_observations() {
    let (w, s) = gen_airport(3, 3, SensorKind::A, false).unwrap();
    let joint = compose(&w, &s).unwrap();
    let p = |state: &str, z: &str| {
        let id = joint.state_id(&format!("{state}@sense")).unwrap();
        joint.obs(id).get(joint.observation_id(z).unwrap())
    };
    assert_eq!((p("RD2", "M_o"), p("RD2", "R_o")), (frac(1, 2), frac(1, 2)));
    assert_eq!((p("RD1", "M_o"), p("RD1", "R_o")), (frac(1, 3), frac(2, 3)));
    assert_eq!((p("MD1", "L_o"), p("MD1", "M_o"), p("MD1", "R_o")), (frac(1, 8), frac(3, 4), frac(1, 8)));
    assert_eq!((p("MD0", "L_o"), p("MD0", "M_o")), (frac(1, 100), frac(98, 100)));
    assert_eq!((p("LD0", "L_o"), p("LD0", "M_o")), (frac(19, 20), frac(1, 20)));
}

#[test]
fn joint_state_count_is_the_product() {
    for kind in [SensorKind::A, SensorKind::B] {
        let (w, s) = gen_airport(4, 4, kind, false).unwrap();
        let joint = compose(&w, &s).unwrap();
        // The sensor modes mix, so every product state is reachable except
        // world states the world itself never reaches.
        let world_reach = (0..w.num_states()).filter(|&u| reachable(&w, u)).count();
        assert_eq!(w.num_states(), 4 * 4);
        assert_eq!(joint.num_states(), world_reach * s.num_states());
    }
    assert_eq!(airport_world(3, 3).unwrap().num_states(), 9);
}

fn reachable(m: &Mdp, target: usize) -> bool {
    let mut seen = vec![false; m.num_states()];
    let mut stack: Vec<usize> = m.init().support().collect();
    while let Some(s) = stack.pop() {
        if std::mem::replace(&mut seen[s], true) {
            continue;
        }
        stack.extend(m.choices(s).iter().flat_map(|c| c.succ.support()));
    }
    seen[target]
}

#[test]
fn evade_observation_alphabet() {
    let m = gen_evade(4, EvadeKind::V, Some(2)).unwrap();
    assert_eq!(m.num_observations(), 16 * 17);
    assert!(m.label(labels::EVADE_CRASH).is_some());
}

/// A visible move reveals the heading, a turn hides it again. The filter
/// must keep reopening to all headings rather than collapse for good.
#[test]
fn hidden_heading_keeps_the_filter_wide() {
    let m = Arc::new(gen_evade(4, EvadeKind::I, None).unwrap());
    let r = RiskSpec::parse("reach-max(crash,2)").unwrap().resolve(&m).unwrap();
    let mut wide_at_five = 0;
    for seed in 0..10 {
        let trace = simulate(&m, SimConfig { seed, length: 5 }).unwrap().trace;
        let mut mon = MonitorSession::new(m.clone(), r.clone(), Mode::Mdp).unwrap();
        let dims: Vec<usize> = trace.iter().map(|&z| mon.feed(z).unwrap().dim.unwrap()).collect();
        assert!(dims[1..].iter().any(|&d| d >= 2), "seed {seed}: dimensions {dims:?}");
        wide_at_five += usize::from(dims[4] >= 2);
    }
    assert!(wide_at_five > 5, "{wide_at_five} of 10");
}

#[test]
fn refuel_empty_battery_absorbs() {
    let m = gen_refuel(4, 5, SensorKind::A).unwrap();
    let empty = m.label(labels::REFUEL_EMPTY).unwrap();
    assert!(!empty.is_empty());
    for &s in empty {
        assert!(m.choices(s).iter().all(|c| c.succ.support().eq([s])));
    }
}

fn small_suite(with_all_candidates: bool) -> Suite {
    let models = if with_all_candidates {
        vec![BenchModel::from_spec("refuel", gen_refuel(3, 4, SensorKind::A).unwrap(), "reach-max(empty,2)").unwrap()]
    } else {
        // Keeping every candidate explodes on the airport within a few steps.
        let (w, s) = gen_airport(3, 4, SensorKind::B, true).unwrap();
        vec![BenchModel::from_spec("airport", compose(&w, &s).unwrap(), "reach-max(crash,3)").unwrap()]
    };
    let methods = Method::ALL.into_iter().filter(|&m| with_all_candidates || m != Method::FfNoCh).collect();
    Suite { name: "small".into(), models, methods }
}

#[test]
fn harness_output_is_deterministic() {
    for full in [true, false] {
        let suite = small_suite(full);
        let a = run_bench(&suite, &[0, 1, 2], 12, None).unwrap();
        let b = run_bench(&suite, &[0, 1, 2], 12, None).unwrap();
        assert_eq!(serialize_results_untimed(&a, true), serialize_results_untimed(&b, true));
        let per_trace = suite.methods.len();
        assert_eq!(a.len(), 3 * per_trace);
        for row in &a {
            let filter = row.method.starts_with("ff");
            assert_eq!(row.beliefs.is_some(), filter, "{}", row.method);
            assert_eq!(row.dim.is_some(), filter);
            assert_eq!(row.unrolled_states.is_some(), !filter);
            assert!(!matches!(row.risk, RiskCell::Failed(_) | RiskCell::Timeout));
        }
        // The exact methods agree on every trace.
        for chunk in a.chunks(per_trace) {
            let exact: Vec<&RiskCell> =
                chunk.iter().filter(|r| r.method != Method::UnrIvi.name()).map(|r| &r.risk).collect();
            assert!(exact.windows(2).all(|w| w[0] == w[1]), "{exact:?}");
        }
    }
}
