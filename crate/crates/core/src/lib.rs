pub mod compose;
pub mod dist;
pub mod error;
pub mod mdp;
pub mod model_io;
pub mod rational;
pub mod risk;
pub mod simulator;
pub mod bench;

pub use dist::Dist;
pub use error::{Error, Result};
pub use mdp::{Choice, Mdp, MdpBuilder};
pub use rational::Rational;
pub use risk::RiskVector;
pub mod deadline;
pub mod filtering;
pub mod lp;
pub mod monitor;
pub mod oracle;
pub mod unrolling;
