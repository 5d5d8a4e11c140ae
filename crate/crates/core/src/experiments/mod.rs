//! Experiment harness: configuration, replica aggregation, the named
//! verification suites and their CSV output.
//!
//! A suite run produces one [`ResultRecord`] per check and writes three files
//! into the output directory:
//!
//! * `<suite>.csv`, one row per check ([`RESULT_COLUMNS`]), preceded by `#`
//!   lines recording the full configuration and the seed;
//! * `<suite>_values.csv`, the per-replica values behind each check
//!   ([`VALUE_COLUMNS`]);
//! * `<suite>_summary.txt`, a human-readable report with timings.
//!
//! The two CSV files depend only on the configuration, so reruns with the
//! same seed reproduce them byte for byte.

mod config;
mod output;
mod stats;
mod suites;
pub mod tables;
mod tolerances;

use thiserror::Error;

use crate::correlations::CorrelationError;
use crate::couplings::CouplingError;
use crate::heat::HeatError;
use crate::kernel::KernelError;
use crate::particles::SimError;

pub use config::{ExperimentConfig, OUT_DIR_ENV};
pub use output::{write_results, write_summary, write_values, RESULT_COLUMNS, VALUE_COLUMNS};
pub use stats::{
    aggregate_replicas, chi_square_poisson, ks_two_sample, Aggregate, ChiSquare, KsTest,
    KS_COEFF_1PCT,
};
pub use suites::{execute_suite, run_suite, suite_names, SUITES};
pub use tolerances::{default_tolerance, Tolerance, DEFAULT_TOLERANCES, TOLERANCE_TABLE_VERSION};

/// Errors raised by the library modules a suite drives.
#[derive(Debug, Error)]
pub enum ModuleError {
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Stats(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot aggregate an empty list of values")]
    EmptyInput,
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown suite `{name}`; available suites: {}", .available.join(", "))]
    UnknownSuite {
        name: String,
        available: Vec<&'static str>,
    },
    #[error("suite {suite}: {source}")]
    Suite {
        suite: String,
        #[source]
        source: ModuleError,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// True for the configuration-time errors (bad keys, values or suite).
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_) | Self::UnknownSuite { .. })
    }
}

/// One check of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub suite: String,
    pub check: String,
    pub parameters: Vec<(String, String)>,
    /// Per-replica (or per-point) values the statistic was computed from.
    pub values: Vec<f64>,
    /// Aggregate of `values`; `None` when there are none.
    pub aggregate: Option<Aggregate>,
    /// The number compared against `[lower, upper]`.
    pub statistic: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
    /// Seconds spent on this check.
    pub wall_clock: f64,
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// True if every record passed.
pub fn all_pass(records: &[ResultRecord]) -> bool {
    records.iter().all(|r| r.pass)
}
