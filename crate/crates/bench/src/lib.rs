//! Config-driven benchmark runner for Nyström landmark selection.
//!
//! A run loads a data set, evaluates every (selector, m, trial) cell and
//! writes a per-trial CSV, an aggregated summary CSV and a JSON report that
//! also echoes the full configuration.

pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Task};
pub use error::{BenchError, BenchResult};
pub use report::ReportPaths;
pub use runner::{run_experiment, run_prepared, run_trial, Prepared};

/// Runs an experiment and writes its reports.
pub fn run(cfg: &ExperimentConfig) -> BenchResult<ReportPaths> {
    let reports = run_experiment(cfg)?;
    report::write_reports(cfg, &reports)
}
