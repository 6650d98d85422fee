use serde::{Deserialize, Serialize};

use crate::ensembles::{sample, EnsembleSpec, Model};
use crate::error::{Error, Result};
use crate::ethstats::{
    corrected_elements, matrix_elements, pool_statistics, select_window, window_samples, BasisKind,
    DiagReference, EnergyWindow, EthStatistics, OffdiagMoments, WindowSamples,
};
use crate::fock::number_operator;
use crate::spectral::{decompose_with, SpectralOptions};
use crate::stats::{slope_fit, SlopeFit};

use super::config::{resolve_jobs, RunConfig};
use super::Provenance;

/// Everything one accepted realization contributes to the pooled statistics.
#[derive(Debug, Clone)]
pub struct RealizationResult {
    pub index: u64,
    /// One entry per requested window.
    pub windows: Vec<WindowSamples>,
    /// Right-left off-diagonal moments, one entry per window.
    pub right_left: Vec<OffdiagMoments>,
    pub residual: f64,
    pub pairing_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: u64,
    pub reason: String,
}

/// Whether a failure rejects the realization (and triggers a replacement)
/// rather than aborting the run.
fn is_rejection(e: &Error) -> bool {
    matches!(e, Error::ExceptionalPoint { .. } | Error::Eigensolver(_))
}

/// Sample, decompose and reduce one realization.
pub fn process_realization(
    spec: &EnsembleSpec,
    observable_mode: usize,
    windows: &[EnergyWindow],
    opts: &SpectralOptions,
) -> Result<RealizationResult> {
    let real = sample(spec)?;
    let dec = decompose_with(real.matrix.as_ref(), opts)?;
    let o = number_operator(observable_mode, &real.basis)?;
    let rr = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight)?;
    let rl = matrix_elements(o.as_ref(), &dec, BasisKind::RightLeft)?;
    let tilde = corrected_elements(&rr)?;
    let eps = dec.eigenvalues();
    Ok(RealizationResult {
        index: spec.realization_index,
        windows: windows
            .iter()
            .map(|w| window_samples(&rr, &tilde, eps, w))
            .collect(),
        right_left: windows
            .iter()
            .map(|w| OffdiagMoments::of(rl.elements.as_ref(), &select_window(eps, w)))
            .collect(),
        residual: dec.residual(),
        pairing_error: dec.pairing_error(),
    })
}

/// Accepted and rejected realizations for one system size.
#[derive(Debug, Clone)]
pub struct SizeOutcome {
    pub n_modes: usize,
    pub requested: usize,
    /// Sorted by index.
    pub accepted: Vec<RealizationResult>,
    pub rejected: Vec<Rejection>,
}

/// Runs `count` realizations, replacing rejected ones with indices `count`,
/// `count + 1`, ... so the accepted set does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn sweep_size(
    model: Model,
    n_modes: usize,
    count: usize,
    master_seed: u64,
    observable_mode: usize,
    windows: &[EnergyWindow],
    opts: &SpectralOptions,
    retry_budget: usize,
) -> Result<SizeOutcome> {
    use rayon::prelude::*;

    let mut accepted = Vec::with_capacity(count);
    let mut rejected: Vec<Rejection> = Vec::new();
    let mut next = 0u64;
    while accepted.len() < count {
        let batch: Vec<u64> = (next..next + (count - accepted.len()) as u64).collect();
        next += batch.len() as u64;
        let results: Vec<(u64, Result<RealizationResult>)> = batch
            .par_iter()
            .map(|&k| {
                let spec = EnsembleSpec::new(model, n_modes, master_seed, k);
                (k, process_realization(&spec, observable_mode, windows, opts))
            })
            .collect();
        for (k, res) in results {
            match res {
                Ok(r) => accepted.push(r),
                Err(e) if is_rejection(&e) => rejected.push(Rejection {
                    index: k,
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        if rejected.len() > retry_budget {
            return Err(Error::RetryBudgetExhausted {
                n_modes,
                rejected: rejected.len(),
            });
        }
    }
    accepted.sort_by_key(|r| r.index);
    Ok(SizeOutcome {
        n_modes,
        requested: count,
        accepted,
        rejected,
    })
}

/// Pooled statistics for one size and one window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeReport {
    pub n_modes: usize,
    pub dim: usize,
    pub requested: usize,
    pub used_indices: Vec<u64>,
    pub rejected: Vec<Rejection>,
    pub stats: EthStatistics,
    pub variance_ratio: f64,
    /// RMS of `|<R_m|O|L_n>|` over windowed pairs.
    pub rms_right_left: f64,
    pub max_residual: f64,
    pub max_pairing_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub model: Model,
    pub master_seed: u64,
    pub window: EnergyWindow,
    pub reference: DiagReference,
    pub observable_mode: usize,
    pub sizes: Vec<SizeReport>,
    /// `log10 var_diag` against `log10 D`.
    pub slope_diag: Option<SlopeFit>,
    /// `log10 var_offdiag` against `log10 D`.
    pub slope_offdiag: Option<SlopeFit>,
    /// `log10` RMS of corrected right-right elements against `log10 D`.
    pub slope_rms_corrected: Option<SlopeFit>,
    /// `log10` RMS of right-left elements against `log10 D`.
    pub slope_rms_right_left: Option<SlopeFit>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn size(&self, n_modes: usize) -> Option<&SizeReport> {
        self.sizes.iter().find(|s| s.n_modes == n_modes)
    }
}

fn fit_if_possible(points: Vec<(usize, f64)>) -> Option<SlopeFit> {
    if points.len() < 3 {
        return None;
    }
    slope_fit(&points).ok()
}

fn build_report(
    config: &RunConfig,
    window: &EnergyWindow,
    w: usize,
    outcomes: &[SizeOutcome],
) -> Result<RunReport> {
    let reference = config.reference();
    let mut sizes = Vec::with_capacity(outcomes.len());
    for out in outcomes {
        let samples: Vec<WindowSamples> = out.accepted.iter().map(|r| r.windows[w].clone()).collect();
        let stats = pool_statistics(&samples, window, reference)?;
        let rl = out
            .accepted
            .iter()
            .fold(OffdiagMoments::default(), |acc, r| acc.merge(r.right_left[w]));
        sizes.push(SizeReport {
            n_modes: out.n_modes,
            dim: crate::fock::enumerate_half_filling(out.n_modes)?.dim(),
            requested: out.requested,
            used_indices: out.accepted.iter().map(|r| r.index).collect(),
            rejected: out.rejected.clone(),
            variance_ratio: stats.variance_ratio(),
            rms_right_left: rl.rms(),
            max_residual: out.accepted.iter().map(|r| r.residual).fold(0.0, f64::max),
            max_pairing_error: out.accepted.iter().map(|r| r.pairing_error).fold(0.0, f64::max),
            stats,
        });
    }
    let pts = |f: &dyn Fn(&SizeReport) -> f64| -> Vec<(usize, f64)> {
        sizes.iter().map(|s| (s.dim, f(s))).collect()
    };
    let rejected_total = outcomes.iter().map(|o| o.rejected.len()).sum();
    Ok(RunReport {
        schema: 1,
        model: config.model,
        master_seed: config.master_seed,
        window: *window,
        reference,
        observable_mode: config.observable_mode,
        slope_diag: fit_if_possible(pts(&|s| s.stats.var_diag)),
        slope_offdiag: fit_if_possible(pts(&|s| s.stats.var_offdiag)),
        slope_rms_corrected: fit_if_possible(pts(&|s| s.stats.rms_corrected_offdiag)),
        slope_rms_right_left: fit_if_possible(pts(&|s| s.rms_right_left)),
        sizes,
        provenance: Provenance::new(config, rejected_total),
    })
}

/// Runs the sweep once and pools it separately for every window, so that
/// several windows share the same decompositions. Returns one report per
/// window, in the order given.
pub fn run_sweep_windows(config: &RunConfig, windows: &[EnergyWindow]) -> Result<Vec<RunReport>> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::invalid("at least one window is required"));
    }
    for w in windows {
        w.validate()?;
    }
    // Parallelism lives at the realization level; the dense kernels stay
    // sequential so results do not depend on the worker count.
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_jobs(config.parallelism))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    let opts = config.tolerances.spectral();
    let outcomes: Vec<SizeOutcome> = pool.install(|| {
        config
            .sizes
            .iter()
            .zip(&config.realizations_per_size)
            .map(|(&n, &k)| {
                sweep_size(
                    config.model,
                    n,
                    k,
                    config.master_seed,
                    config.observable_mode,
                    windows,
                    &opts,
                    config.tolerances.retry_budget,
                )
            })
            .collect::<Result<_>>()
    })?;
    windows
        .iter()
        .enumerate()
        .map(|(w, window)| build_report(config, window, w, &outcomes))
        .collect()
}

/// Runs the configured sweep and, when `output_dir` is set, writes the
/// summary, sample and histogram files there.
pub fn run_sweep(config: &RunConfig) -> Result<RunReport> {
    let report = run_sweep_windows(config, &[config.window])?
        .pop()
        .expect("one window requested");
    if let Some(dir) = &config.output_dir {
        super::report::write_run(&report, config, dir)?;
    }
    Ok(report)
}
