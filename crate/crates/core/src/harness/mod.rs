//! Ensemble sweeps, report emission and the command-line front end.

pub mod cli;
pub mod config;
pub mod report;
pub mod sweep;

use serde::{Deserialize, Serialize};

pub use config::{resolve_jobs, RunConfig, Tolerances};
pub use report::{write_run, Manifest, ManifestEntry};
pub use sweep::{
    process_realization, run_sweep, run_sweep_windows, sweep_size, Rejection, RunReport,
    SizeOutcome, SizeReport,
};

/// Eigensolver backing the spectral module, recorded in run provenance.
pub const EIGENSOLVER: &str = "faer 0.24 dense complex eigendecomposition, sequential";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub rng_algorithm: String,
    pub eigensolver: String,
    pub code_version: String,
    pub rejected_realizations: usize,
}

impl Provenance {
    pub fn new(config: &RunConfig, rejected_realizations: usize) -> Self {
        Self {
            config_sha256: config.hash(),
            rng_algorithm: crate::ensembles::RNG_ALGORITHM.to_string(),
            eigensolver: EIGENSOLVER.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            rejected_realizations,
        }
    }
}
