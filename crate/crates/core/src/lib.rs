//! Simulation and exact-analysis toolkit for the two-color undecided-state
//! dynamics in the synchronous uniform PULL model.

pub mod bounds;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod graph;
pub mod phase;
pub mod report;
pub mod rng;
pub mod stats;

pub use config::{Configuration, StepDecomposition};
pub use dynamics::{expected_next, run_until_absorbed, step, step_decomposed, Expectation, Outcome, Run};
pub use error::{Error, Result};
pub use phase::{classify, PhaseParameters, Region};
pub use rng::RandomSource;
