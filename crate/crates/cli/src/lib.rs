//! Experiment harness for `dyadica`: seeded instance sweeps, CSV and JSON
//! reports, and row-level descriptions.

pub mod config;
pub mod describe;
pub mod error;
pub mod report;
pub mod suites;

use std::path::Path;

pub use config::{ExperimentConfig, Suite, Tolerances, WeightFamily};
pub use describe::describe;
pub use error::{CliError, Result};
pub use report::{Cell, Report, ReportRow};
pub use suites::{instance_seed, run_suite};

/// Environment variable capping the worker pool.
pub const THREADS_VAR: &str = "DYADICA_THREADS";

/// Runs a suite and writes its report, plus the JSON sidecar if configured.
pub fn run_and_write(config: &ExperimentConfig) -> Result<Report> {
    let report = run_suite(config)?;
    let json = config.json_path();
    report.write(&config.output, config.json.then_some(json.as_path()))?;
    Ok(report)
}

/// Writes `x^α` on a depth-`depth` grid in the plain-text weight format.
pub fn write_power_weight(alpha: f64, depth: u32, out: &Path) -> Result<()> {
    let w = dyadica::power_weight(alpha, dyadica::Grid::new(depth)?)?;
    std::fs::write(out, dyadica::io::write_weight(&w)).map_err(|e| CliError::io(out, e))
}

/// Thread count requested through [`THREADS_VAR`], if any.
pub fn requested_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_VAR}=`{s}` is not a positive integer"))),
        },
    }
}
