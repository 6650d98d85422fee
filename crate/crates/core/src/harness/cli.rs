//! `nheth` command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dynamics::{
    asymptotic_state, expectation, expectation_trajectory, random_density_matrix,
    slowest_decay_index, AsymptoteKind, DynamicsState,
};
use crate::ensembles::{sample, write_matrix, EnsembleSpec, Model};
use crate::error::{Error, Result};
use crate::ethstats::{corrected_elements, matrix_elements, BasisKind, DiagReference, EnergyWindow, OffdiagMoments};
use crate::fock::number_operator;
use crate::linalg::projector;
use crate::spectral::{decompose_with, overlap_gram, SpectralDecomposition, SpectrumSummary};
use crate::{c64, Mat};

use super::config::{resolve_jobs, RunConfig};
use super::report::{csv_table, load_report, to_json, write_scaling, OutputWriter};
use super::sweep::run_sweep;

#[derive(Debug, Parser)]
#[command(name = "nheth", version, about = "Eigenstate-thermalization statistics for non-Hermitian random Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ginibre, syk1, syk2, syk3, syk-hermitian or ginibre-hermitian.
    #[arg(long)]
    model: Option<Model>,
    /// Number of fermionic modes; comma separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    size: Vec<usize>,
    /// Realizations per size; comma separated, one per size.
    #[arg(long, value_delimiter = ',')]
    realizations: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// disk:<r> or slice:<rho_min>,<rho_max>,<phi_max>
    #[arg(long)]
    window: Option<EnergyWindow>,
    /// Mode index of the observable n_i.
    #[arg(long)]
    mode: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "NHETH_JOBS", default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InitialState {
    /// The first half-filled Fock state.
    Fock,
    /// A full-rank random density matrix.
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one Hamiltonian and write it in the binary matrix format.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Eigenvalues and decomposition diagnostics of one realization.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Full fluctuation-statistics sweep.
    Eth {
        #[command(flatten)]
        common: Common,
        /// global-mean or window-mean.
        #[arg(long)]
        reference: Option<DiagReference>,
    },
    /// Observable trajectory of one realization.
    Dynamics {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        index: u64,
        /// <start>:<stop>:<step>, both ends included.
        #[arg(long, default_value = "0:10:0.1")]
        times: TimeGrid,
        #[arg(long, value_enum, default_value_t = InitialState::Fock)]
        initial: InitialState,
    },
    /// Right-right, corrected and right-left element grids of one realization.
    CompareBases {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Rebuild scaling tables from a previous `eth` output directory.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directory holding summary.json.
        #[arg(long)]
        input: PathBuf,
    },
}

/// Uniform time grid `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid(pub Vec<f64>);

impl FromStr for TimeGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse time grid {s:?}, expected start:stop:step"));
        let parts: Vec<f64> = s
            .split(':')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts.as_slice() else {
            return Err(bad());
        };
        if !(step.is_finite() && *step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 10_000_000 {
            return Err(Error::invalid("time grid has too many points"));
        }
        Ok(TimeGrid((0..n).map(|k| start + step * k as f64).collect()))
    }
}

fn default_realizations(n: usize) -> usize {
    match n {
        8 => 500,
        10 => 200,
        12 => 50,
        _ => 20,
    }
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if !self.size.is_empty() {
            cfg.sizes = self.size.clone();
            if self.realizations.is_empty() {
                cfg.realizations_per_size = self.size.iter().map(|&n| default_realizations(n)).collect();
            }
        }
        if !self.realizations.is_empty() {
            cfg.realizations_per_size = self.realizations.clone();
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        if let Some(m) = self.mode {
            cfg.observable_mode = m;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        if self.jobs > 0 {
            cfg.parallelism = self.jobs;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Spec of a single realization; uses the first configured size.
    fn single(&self, index: u64) -> Result<(RunConfig, EnsembleSpec)> {
        let cfg = self.run_config()?;
        let spec = EnsembleSpec::new(cfg.model, cfg.sizes[0], cfg.master_seed, index);
        spec.validate()?;
        Ok((cfg, spec))
    }

    fn out_dir(&self, cfg: &RunConfig, fallback: &str) -> PathBuf {
        cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(fallback))
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Sample { common, index } => cmd_sample(&common, index),
        Command::Spectrum { common, index } => cmd_spectrum(&common, index),
        Command::Eth { common, reference } => cmd_eth(&common, reference),
        Command::Dynamics {
            common,
            index,
            times,
            initial,
        } => cmd_dynamics(&common, index, &times, initial),
        Command::CompareBases { common, index } => cmd_compare(&common, index),
        Command::Report { common, input } => cmd_report(&common, &input),
    }
}

fn decompose_single(cfg: &RunConfig, spec: &EnsembleSpec) -> Result<(crate::ensembles::HamiltonianRealization, SpectralDecomposition)> {
    faer::set_global_parallelism(faer::Par::rayon(resolve_jobs(cfg.parallelism)));
    let real = sample(spec)?;
    let dec = decompose_with(real.matrix.as_ref(), &cfg.tolerances.spectral())?;
    Ok((real, dec))
}

fn cmd_sample(common: &Common, index: u64) -> Result<()> {
    let (cfg, spec) = common.single(index)?;
    let real = sample(&spec)?;
    let dir = common.out_dir(&cfg, "nheth_sample");
    let mut w = OutputWriter::new(&dir)?;
    let mut bytes = Vec::new();
    write_matrix(&mut bytes, spec.n_modes, spec.model, &real.matrix)
        .map_err(|e| Error::io(&dir, e))?;
    w.write("hamiltonian.bin", &bytes)?;
    w.finish()?;
    println!(
        "{} N={} D={} index={} -> {}",
        spec.model,
        spec.n_modes,
        real.dim(),
        index,
        dir.join("hamiltonian.bin").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRecord {
    schema: u32,
    model: Model,
    n_modes: usize,
    master_seed: u64,
    realization_index: u64,
    max_condition: f64,
    #[serde(flatten)]
    spectrum: SpectrumSummary,
}

fn cmd_spectrum(common: &Common, index: u64) -> Result<()> {
    let (cfg, spec) = common.single(index)?;
    let (_, dec) = decompose_single(&cfg, &spec)?;
    let cond = dec.condition_numbers();
    let dir = common.out_dir(&cfg, "nheth_spectrum");
    let mut w = OutputWriter::new(&dir)?;
    let record = SpectrumRecord {
        schema: 1,
        model: spec.model,
        n_modes: spec.n_modes,
        master_seed: spec.master_seed,
        realization_index: index,
        max_condition: cond.iter().copied().fold(0.0, f64::max),
        spectrum: dec.summary(),
    };
    w.write("spectrum.json", to_json(&record).as_bytes())?;
    let rows = dec
        .eigenvalues()
        .iter()
        .zip(&cond)
        .enumerate()
        .map(|(m, (z, c))| vec![m.to_string(), format!("{}", z.re), format!("{}", z.im), format!("{c}")]);
    w.write("eigenvalues.csv", csv_table(&["index", "re", "im", "condition"], rows).as_bytes())?;
    w.finish()?;
    println!(
        "{} N={} D={} residual={:.3e} pairing_error={:.3e} -> {}",
        spec.model,
        spec.n_modes,
        dec.dim(),
        dec.residual(),
        dec.pairing_error(),
        dir.display()
    );
    Ok(())
}

fn cmd_eth(common: &Common, reference: Option<DiagReference>) -> Result<()> {
    let mut cfg = common.run_config()?;
    if reference.is_some() {
        cfg.reference = reference;
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("nheth_eth"));
    }
    let report = run_sweep(&cfg)?;
    println!("model={} window={} reference={:?}", report.model, report.window, report.reference);
    for s in &report.sizes {
        println!(
            "N={:2} D={:5} k={:4} diag_mean={:.5} var_diag={:.4e} var_offdiag={:.4e} ratio={:.3} rejected={}",
            s.n_modes,
            s.dim,
            s.used_indices.len(),
            s.stats.diag_mean,
            s.stats.var_diag,
            s.stats.var_offdiag,
            s.variance_ratio,
            s.rejected.len()
        );
    }
    if let (Some(d), Some(o)) = (report.slope_diag, report.slope_offdiag) {
        println!("slope_diag={:.4} slope_offdiag={:.4}", d.slope, o.slope);
    }
    println!("-> {}", cfg.output_dir.as_deref().unwrap_or(Path::new(".")).display());
    Ok(())
}

#[derive(Serialize)]
struct DynamicsRecord {
    schema: u32,
    model: Model,
    n_modes: usize,
    master_seed: u64,
    realization_index: u64,
    observable_mode: usize,
    initial: InitialState,
    slowest_decay_index: Option<usize>,
    /// `<R|O|R>` of the slowest-decaying right eigenvector.
    asymptotic_value: Option<f64>,
    points: usize,
}

fn cmd_dynamics(common: &Common, index: u64, times: &TimeGrid, initial: InitialState) -> Result<()> {
    let (cfg, spec) = common.single(index)?;
    let (real, dec) = decompose_single(&cfg, &spec)?;
    let d = real.dim();
    let rho = match initial {
        InitialState::Fock => {
            let mut e = vec![c64::new(0.0, 0.0); d];
            e[0] = c64::new(1.0, 0.0);
            projector(&e)
        }
        InitialState::Random => random_density_matrix(d, spec.master_seed ^ index),
    };
    let o = number_operator(cfg.observable_mode, &real.basis)?;
    let state = DynamicsState::new(rho.as_ref(), &dec)?;
    let traj = expectation_trajectory(o.as_ref(), &state, &dec, &times.0)?;
    let slowest = slowest_decay_index(&dec, 1e-10).ok();
    let asymptotic_value = match asymptotic_state(&state, &dec, AsymptoteKind::SlowestDecay) {
        Ok(p) => Some(expectation(o.as_ref(), p.as_ref()).re),
        Err(_) => None,
    };
    let dir = common.out_dir(&cfg, "nheth_dynamics");
    let mut w = OutputWriter::new(&dir)?;
    let rows = traj.iter().map(|p| {
        vec![
            format!("{}", p.t),
            format!("{}", p.value.re),
            format!("{}", p.value.im),
            format!("{}", p.trace_factor),
        ]
    });
    w.write("trajectory.csv", csv_table(&["t", "re", "im", "trace_factor"], rows).as_bytes())?;
    let record = DynamicsRecord {
        schema: 1,
        model: spec.model,
        n_modes: spec.n_modes,
        master_seed: spec.master_seed,
        realization_index: index,
        observable_mode: cfg.observable_mode,
        initial,
        slowest_decay_index: slowest,
        asymptotic_value,
        points: traj.len(),
    };
    w.write("dynamics.json", to_json(&record).as_bytes())?;
    w.finish()?;
    println!("{} N={} D={} points={} -> {}", spec.model, spec.n_modes, d, traj.len(), dir.display());
    Ok(())
}

fn grid_csv(m: &Mat<c64>) -> String {
    let d = m.nrows();
    let rows = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| {
        vec![i.to_string(), j.to_string(), format!("{}", m[(i, j)].norm())]
    });
    csv_table(&["m", "n", "abs"], rows)
}

#[derive(Serialize)]
struct CompareRecord {
    schema: u32,
    model: Model,
    n_modes: usize,
    dim: usize,
    master_seed: u64,
    realization_index: u64,
    observable_mode: usize,
    max_gram_offdiag: f64,
    rms_offdiag_right_right: f64,
    rms_offdiag_corrected: f64,
    rms_offdiag_right_left: f64,
}

fn cmd_compare(common: &Common, index: u64) -> Result<()> {
    let (cfg, spec) = common.single(index)?;
    let (real, dec) = decompose_single(&cfg, &spec)?;
    let o = number_operator(cfg.observable_mode, &real.basis)?;
    let rr = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight)?;
    let rl = matrix_elements(o.as_ref(), &dec, BasisKind::RightLeft)?;
    let tilde = corrected_elements(&rr)?;
    let all: Vec<usize> = (0..dec.dim()).collect();
    let dir = common.out_dir(&cfg, "nheth_compare");
    let mut w = OutputWriter::new(&dir)?;
    w.write("right_right.csv", grid_csv(&rr.elements).as_bytes())?;
    w.write("corrected.csv", grid_csv(&tilde.tilde).as_bytes())?;
    w.write("right_left.csv", grid_csv(&rl.elements).as_bytes())?;
    let record = CompareRecord {
        schema: 1,
        model: spec.model,
        n_modes: spec.n_modes,
        dim: dec.dim(),
        master_seed: spec.master_seed,
        realization_index: index,
        observable_mode: cfg.observable_mode,
        max_gram_offdiag: overlap_gram(&dec).max_offdiag(),
        rms_offdiag_right_right: OffdiagMoments::of(rr.elements.as_ref(), &all).rms(),
        rms_offdiag_corrected: OffdiagMoments::of(tilde.tilde.as_ref(), &all).rms(),
        rms_offdiag_right_left: OffdiagMoments::of(rl.elements.as_ref(), &all).rms(),
    };
    w.write("compare.json", to_json(&record).as_bytes())?;
    w.finish()?;
    println!(
        "{} N={} rms |<R|O|R>|={:.4e} corrected={:.4e} |<R|O|L>|={:.4e} -> {}",
        spec.model,
        spec.n_modes,
        record.rms_offdiag_right_right,
        record.rms_offdiag_corrected,
        record.rms_offdiag_right_left,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SlopeRecord {
    schema: u32,
    model: Model,
    window: EnergyWindow,
    slope_diag: Option<crate::stats::SlopeFit>,
    slope_offdiag: Option<crate::stats::SlopeFit>,
    slope_rms_corrected: Option<crate::stats::SlopeFit>,
    slope_rms_right_left: Option<crate::stats::SlopeFit>,
    variance_ratios: Vec<(usize, f64)>,
}

fn cmd_report(common: &Common, input: &Path) -> Result<()> {
    let report = load_report(input)?;
    let dir = common.out.clone().unwrap_or_else(|| input.join("report"));
    let mut w = OutputWriter::new(&dir)?;
    write_scaling(&report, &mut w)?;
    let record = SlopeRecord {
        schema: 1,
        model: report.model,
        window: report.window,
        slope_diag: report.slope_diag,
        slope_offdiag: report.slope_offdiag,
        slope_rms_corrected: report.slope_rms_corrected,
        slope_rms_right_left: report.slope_rms_right_left,
        variance_ratios: report.sizes.iter().map(|s| (s.n_modes, s.variance_ratio)).collect(),
    };
    w.write("slopes.json", to_json(&record).as_bytes())?;
    w.finish()?;
    println!("{} sizes from {} -> {}", report.sizes.len(), input.display(), dir.display());
    Ok(())
}
