//! Scenario files, batch runs and report emission for the pulse-culled SIS
//! model. The numerics live in [`pulsesis_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod export;
pub mod plot;
pub mod report;
pub mod runner;

pub use config::{load_scenario, LoadError, LoadedScenario, OutputSpec, ScenarioFile};
pub use report::RunReport;
pub use runner::{analyze, run, run_batch, RunOptions, RunOutcome};
