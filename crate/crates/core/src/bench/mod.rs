mod airport;
mod evade;
mod families;
mod harness;
mod random;
mod refuel;

pub use airport::{airport_sensor, airport_world, gen_airport, SensorKind};
pub use evade::{gen_evade, EvadeKind};
pub use families::{gen_blowup, gen_blowup_ext};
pub use harness::{desk_suite, render_table, run_bench, run_session, suite_by_name, BenchModel, BenchRow, Method, SessionRun, Suite};
pub use random::{attached_risk, corpus, random_mdp, random_trace, Instance, RandomSpec};
pub use refuel::{gen_refuel, refuel_sensor, refuel_world};

/// Target labels of the generated families.
pub mod labels {
    pub use super::airport::CRASH as AIRPORT_CRASH;
    pub use super::evade::CRASH as EVADE_CRASH;
    pub use super::refuel::EMPTY as REFUEL_EMPTY;
}
