//! Std companion of `qlab-core`: scenario files, rayon drivers, reports and
//! the `qlab` command line.

pub mod config;
pub mod error;
pub mod parallel;
pub mod report;
pub mod run;

pub use config::{Pipeline, Scenario, ScenarioConfig};
pub use error::RunError;
pub use run::{run_scenario, RunOutput, Summary};
