//! Experiment harness around the `uopc` library: TOML-configured seeded
//! sweeps written as CSV, plus the single-run commands behind the `uopc`
//! binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, write_csv, ExperimentReport, ResultRow};
