use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensembles::Model;
use crate::error::{Error, Result};
use crate::ethstats::{DiagReference, EnergyWindow};
use crate::fock::MAX_MODES;
use crate::spectral::SpectralOptions;

/// Named numerical thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub pairing_threshold: f64,
    pub max_condition: f64,
    /// Replacement realizations drawn per size before the run aborts.
    pub retry_budget: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SpectralOptions::default();
        Self {
            pairing_threshold: s.pairing_threshold,
            max_condition: s.max_condition,
            retry_budget: 16,
        }
    }
}

impl Tolerances {
    pub fn spectral(&self) -> SpectralOptions {
        SpectralOptions {
            pairing_threshold: self.pairing_threshold,
            max_condition: self.max_condition,
        }
    }
}

fn default_window() -> EnergyWindow {
    EnergyWindow::Disk { radius: 0.2 }
}

/// Sweep configuration, read from TOML. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "RunConfig::default_model")]
    pub model: Model,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "RunConfig::default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "RunConfig::default_realizations")]
    pub realizations_per_size: Vec<usize>,
    #[serde(default = "default_window")]
    pub window: EnergyWindow,
    /// Mode index `i` of the observable `n_i`.
    #[serde(default)]
    pub observable_mode: usize,
    /// Defaults to the global mean for Ginibre and the window mean for SYK.
    #[serde(default)]
    pub reference: Option<DiagReference>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 picks the available parallelism.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Self::default_model(),
            master_seed: 0,
            sizes: Self::default_sizes(),
            realizations_per_size: Self::default_realizations(),
            window: default_window(),
            observable_mode: 0,
            reference: None,
            output_dir: None,
            parallelism: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    fn default_model() -> Model {
        Model::GinibreComplex
    }

    fn default_sizes() -> Vec<usize> {
        vec![8, 10, 12]
    }

    fn default_realizations() -> Vec<usize> {
        vec![500, 200, 50]
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("sizes must not be empty".into()));
        }
        if self.sizes.len() != self.realizations_per_size.len() {
            return Err(Error::Config(format!(
                "sizes has {} entries but realizations_per_size has {}",
                self.sizes.len(),
                self.realizations_per_size.len()
            )));
        }
        for &n in &self.sizes {
            if n % 2 != 0 || !(2..=MAX_MODES).contains(&n) {
                return Err(Error::Config(format!(
                    "size {n} must be even and within 2..={MAX_MODES}"
                )));
            }
            if self.observable_mode >= n {
                return Err(Error::Config(format!(
                    "observable_mode {} is out of range for N={n}",
                    self.observable_mode
                )));
            }
        }
        if let Some(k) = self.realizations_per_size.iter().find(|&&k| k == 0) {
            return Err(Error::Config(format!("realization counts must be at least 1, got {k}")));
        }
        self.window
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let t = &self.tolerances;
        if !(t.pairing_threshold > 0.0 && t.max_condition > 1.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn reference(&self) -> DiagReference {
        self.reference.unwrap_or(if self.model.is_syk() {
            DiagReference::WindowMean
        } else {
            DiagReference::GlobalMean
        })
    }

    /// SHA-256 of the canonical TOML form, excluding the output directory and
    /// worker count, which do not affect results.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = None;
        canon.parallelism = 0;
        canon.reference = Some(self.reference());
        hex_digest(canon.to_toml().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `--jobs`, then `NHETH_JOBS`, then the machine's available parallelism.
pub fn resolve_jobs(requested: usize) -> usize {
    if requested > 0 {
        return requested;
    }
    if let Some(n) = std::env::var("NHETH_JOBS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            return n;
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
