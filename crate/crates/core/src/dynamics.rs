//! Density-matrix evolution under a non-Hermitian Hamiltonian,
//! `rho(t) = e^{-iHt} rho_in e^{iH^dagger t}`, expanded in the biorthogonal
//! eigenbasis as `sum_mn e^{-i t phi_mn} a_mn |R_m><R_n|`.

use faer::{c64, Mat, MatRef, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, identity, trace};
use crate::spectral::SpectralDecomposition;

#[derive(Debug, Clone, Copy)]
pub struct DynamicsOptions {
    /// Largest exponent `2 t s_max` evaluated without rescaling.
    pub exponent_bound: f64,
    /// Two decay rates closer than this count as tied.
    pub tie_tolerance: f64,
    /// Largest `|Im eps|`, relative to `max |eps|`, accepted as a real spectrum.
    pub real_tolerance: f64,
    /// Tolerance for validating the initial density matrix.
    pub state_tolerance: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            exponent_bound: 300.0,
            tie_tolerance: 1e-10,
            real_tolerance: 1e-9,
            state_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicsState {
    rho_in: Mat<c64>,
    /// `a_mn = <L_m|rho_in|L_n>`
    a: Mat<c64>,
    /// `phi_mn = eps_m - conj(eps_n)`
    phases: Mat<c64>,
}

/// Checks that `rho` is Hermitian, positive semidefinite and of unit trace.
pub fn validate_density_matrix(rho: MatRef<'_, c64>, tol: f64) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::invalid("density matrix must be square"));
    }
    let herm = hermiticity_defect(rho);
    if herm > tol {
        return Err(Error::invalid(format!("density matrix is not Hermitian (defect {herm:.3e})")));
    }
    let tr = trace(rho);
    if (tr - c64::new(1.0, 0.0)).norm() > tol * rho.nrows().max(1) as f64 {
        return Err(Error::invalid(format!("density matrix trace is {tr}, expected 1")));
    }
    let min_eig = hermitian_eigenvalues(rho)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -tol {
        return Err(Error::invalid(format!(
            "density matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

impl DynamicsState {
    pub fn new(rho_in: MatRef<'_, c64>, dec: &SpectralDecomposition) -> Result<Self> {
        Self::with_options(rho_in, dec, &DynamicsOptions::default())
    }

    pub fn with_options(
        rho_in: MatRef<'_, c64>,
        dec: &SpectralDecomposition,
        opts: &DynamicsOptions,
    ) -> Result<Self> {
        let d = dec.dim();
        if rho_in.nrows() != d || rho_in.ncols() != d {
            return Err(Error::invalid(format!(
                "initial state is {}x{} but the decomposition has dimension {d}",
                rho_in.nrows(),
                rho_in.ncols()
            )));
        }
        validate_density_matrix(rho_in, opts.state_tolerance)?;
        let l = dec.left();
        let a = l * rho_in * l.adjoint();
        let eps = dec.eigenvalues();
        let phases = Mat::from_fn(d, d, |m, n| eps[m] - eps[n].conj());
        Ok(Self {
            rho_in: rho_in.to_owned(),
            a,
            phases,
        })
    }

    pub fn rho_in(&self) -> MatRef<'_, c64> {
        self.rho_in.as_ref()
    }

    pub fn a(&self) -> MatRef<'_, c64> {
        self.a.as_ref()
    }

    pub fn phases(&self) -> MatRef<'_, c64> {
        self.phases.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `sum_mn a_mn |R_m><R_n|`, which should reproduce `rho_in`.
    pub fn reassemble(&self, dec: &SpectralDecomposition) -> Mat<c64> {
        let r = dec.right();
        r * &self.a * r.adjoint()
    }
}

/// Exponent shift so that `e^{t (s_m + s_n) - shift} <= 1`, applied only when
/// the largest exponent exceeds `bound`.
fn log_shift(dec: &SpectralDecomposition, t: f64, bound: f64) -> f64 {
    let top = (0..dec.dim())
        .map(|m| t * dec.rate(m))
        .fold(f64::NEG_INFINITY, f64::max);
    if 2.0 * top > bound {
        2.0 * top
    } else {
        0.0
    }
}

/// `e^{-i t phi_mn - shift}`
fn weights(state: &DynamicsState, t: f64, shift: f64) -> Mat<c64> {
    let d = state.dim();
    Mat::from_fn(d, d, |m, n| {
        let z = state.phases[(m, n)] * c64::new(0.0, -t);
        c64::from_polar((z.re - shift).exp(), z.im)
    })
}

/// Unnormalized `rho(t) = e^{log_scale} * scaled`.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub scaled: Mat<c64>,
    /// Natural log of the factor that was pulled out; zero when no rescaling
    /// was needed.
    pub log_scale: f64,
}

impl Evolved {
    /// `rho(t)` itself. Overflows when `log_scale` is large.
    pub fn unnormalized(&self) -> Mat<c64> {
        let f = self.log_scale.exp();
        Mat::from_fn(self.scaled.nrows(), self.scaled.ncols(), |i, j| self.scaled[(i, j)] * f)
    }

    /// `rho(t) / Tr rho(t)`.
    pub fn normalized(&self) -> Mat<c64> {
        let tr = trace(self.scaled.as_ref());
        Mat::from_fn(self.scaled.nrows(), self.scaled.ncols(), |i, j| self.scaled[(i, j)] / tr)
    }

    /// `ln Tr rho(t)`.
    pub fn log_trace(&self) -> f64 {
        trace(self.scaled.as_ref()).re.ln() + self.log_scale
    }
}

pub fn evolve(state: &DynamicsState, dec: &SpectralDecomposition, t: f64) -> Result<Evolved> {
    evolve_with(state, dec, t, &DynamicsOptions::default())
}

pub fn evolve_with(
    state: &DynamicsState,
    dec: &SpectralDecomposition,
    t: f64,
    opts: &DynamicsOptions,
) -> Result<Evolved> {
    if !t.is_finite() {
        return Err(Error::invalid(format!("time must be finite, got {t}")));
    }
    let shift = log_shift(dec, t, opts.exponent_bound);
    let w = weights(state, t, shift);
    let d = state.dim();
    let coeff = Mat::from_fn(d, d, |m, n| w[(m, n)] * state.a[(m, n)]);
    let r = dec.right();
    Ok(Evolved {
        scaled: r * &coeff * r.adjoint(),
        log_scale: shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `Tr(O rho(t)) / Tr rho(t)`
    pub value: c64,
    /// `Tr rho(t)`; infinite once it exceeds the float range.
    pub trace_factor: f64,
}

/// Normalized expectation values at each time, computed from `a_mn` and the
/// right-basis elements `<R_n|O|R_m>` without forming `rho(t)`.
pub fn expectation_trajectory(
    o: MatRef<'_, c64>,
    state: &DynamicsState,
    dec: &SpectralDecomposition,
    times: &[f64],
) -> Result<Vec<TrajectoryPoint>> {
    expectation_trajectory_with(o, state, dec, times, &DynamicsOptions::default())
}

pub fn expectation_trajectory_with(
    o: MatRef<'_, c64>,
    state: &DynamicsState,
    dec: &SpectralDecomposition,
    times: &[f64],
    opts: &DynamicsOptions,
) -> Result<Vec<TrajectoryPoint>> {
    let d = state.dim();
    if o.nrows() != d || o.ncols() != d {
        return Err(Error::invalid("observable dimension does not match the state"));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite, got {t}")));
    }
    let r = dec.right();
    let orr = r.adjoint() * o * r;
    let gram = r.adjoint() * r;
    // Tr(O rho) = sum_mn w_mn a_mn <R_n|O|R_m>
    let num = Mat::from_fn(d, d, |m, n| state.a[(m, n)] * orr[(n, m)]);
    let den = Mat::from_fn(d, d, |m, n| state.a[(m, n)] * gram[(n, m)]);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let shift = log_shift(dec, t, opts.exponent_bound);
        let mut top = c64::new(0.0, 0.0);
        let mut bottom = c64::new(0.0, 0.0);
        for n in 0..d {
            for m in 0..d {
                let z = state.phases[(m, n)] * c64::new(0.0, -t);
                let w = c64::from_polar((z.re - shift).exp(), z.im);
                top += w * num[(m, n)];
                bottom += w * den[(m, n)];
            }
        }
        if !(bottom.norm() > f64::MIN_POSITIVE) {
            return Err(Error::invalid(format!("trace of rho(t) vanished at t={t}")));
        }
        out.push(TrajectoryPoint {
            t,
            value: top / bottom,
            trace_factor: bottom.re * shift.exp(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoteKind {
    /// Projector onto the right eigenvector with the largest `Im eps`.
    SlowestDecay,
    /// Dephased state `sum_m a_mm |R_m><R_m|` of a real spectrum.
    DiagonalEnsemble,
}

pub fn asymptotic_state(
    state: &DynamicsState,
    dec: &SpectralDecomposition,
    kind: AsymptoteKind,
) -> Result<Mat<c64>> {
    asymptotic_state_with(state, dec, kind, &DynamicsOptions::default())
}

/// Index of the unique slowest-decaying eigenstate.
pub fn slowest_decay_index(dec: &SpectralDecomposition, tie_tolerance: f64) -> Result<usize> {
    let d = dec.dim();
    let s_max = (0..d).map(|m| dec.rate(m)).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..d).filter(|&m| s_max - dec.rate(m) <= tie_tolerance).collect();
    match tied.as_slice() {
        [m] => Ok(*m),
        _ => Err(Error::AmbiguousAsymptote { indices: tied }),
    }
}

pub fn asymptotic_state_with(
    state: &DynamicsState,
    dec: &SpectralDecomposition,
    kind: AsymptoteKind,
    opts: &DynamicsOptions,
) -> Result<Mat<c64>> {
    let d = dec.dim();
    let r = dec.right();
    match kind {
        AsymptoteKind::SlowestDecay => {
            let m = slowest_decay_index(dec, opts.tie_tolerance)?;
            let col = r.col(m);
            Ok(Mat::from_fn(d, d, |i, j| col[i] * col[j].conj()))
        }
        AsymptoteKind::DiagonalEnsemble => {
            let scale = dec.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
            let worst = dec.eigenvalues().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if worst > opts.real_tolerance * scale.max(1.0) {
                return Err(Error::InvalidRegime(format!(
                    "diagonal ensemble needs a real spectrum, max |Im eps| = {worst:.3e}"
                )));
            }
            let mut rho = Mat::<c64>::zeros(d, d);
            let mut norm = c64::new(0.0, 0.0);
            for m in 0..d {
                let amm = state.a[(m, m)];
                norm += amm;
                for j in 0..d {
                    for i in 0..d {
                        rho[(i, j)] += amm * r[(i, m)] * r[(j, m)].conj();
                    }
                }
            }
            Ok(Mat::from_fn(d, d, |i, j| rho[(i, j)] / norm))
        }
    }
}

/// `(1/2) ||a - b||_1` for Hermitian `a`, `b`.
pub fn trace_distance(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<f64> {
    let diff = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]);
    Ok(0.5 * hermitian_eigenvalues(diff.as_ref())?.iter().map(|x| x.abs()).sum::<f64>())
}

/// `Tr(O rho)` for a normalized `rho`.
pub fn expectation(o: MatRef<'_, c64>, rho: MatRef<'_, c64>) -> c64 {
    trace((o * rho).as_ref())
}

fn gaussian_matrix(d: usize, rng: &mut ChaCha20Rng) -> Mat<c64> {
    let mut m = Mat::<c64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(i, j)] = c64::new(re, im);
        }
    }
    m
}

/// Full-rank random density matrix `A A^dagger / Tr(A A^dagger)`.
pub fn random_density_matrix(d: usize, seed: u64) -> Mat<c64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a = gaussian_matrix(d, &mut rng);
    let rho = &a * a.adjoint();
    let tr = trace(rho.as_ref());
    let raw = Mat::from_fn(d, d, |i, j| rho[(i, j)] / tr);
    // exact Hermitian symmetrization against rounding
    Mat::from_fn(d, d, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5)
}

/// Non-Hermitian matrix with a known real, non-degenerate spectrum.
#[derive(Debug, Clone)]
pub struct RealSpectrumFixture {
    pub matrix: Mat<c64>,
    /// Ascending eigenvalues.
    pub spectrum: Vec<f64>,
    /// 2-norm condition number of the similarity transform.
    pub condition: f64,
}

/// Builds `S diag(lambda) S^{-1}` with `lambda` in `[-1, 1]`, consecutive gaps
/// at least `1e-3`, and `cond(S) < 20`.
pub fn real_spectrum_fixture(d: usize, seed: u64) -> Result<RealSpectrumFixture> {
    use faer::linalg::solvers::DenseSolveCore;

    if d < 1 {
        return Err(Error::invalid("fixture dimension must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let uniform = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let spectrum = loop {
        let mut v: Vec<f64> = (0..d).map(|_| uniform.sample(&mut rng)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
            break v;
        }
    };
    let id = identity(d);
    let mut eps = 0.5 / (d as f64).sqrt();
    for _ in 0..64 {
        let g = gaussian_matrix(d, &mut rng);
        let s = Mat::from_fn(d, d, |i, j| id[(i, j)] + g[(i, j)] * eps);
        let sv = s.singular_values().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let condition = sv[0] / sv[sv.len() - 1];
        if condition < 20.0 && condition > 1.0 + 1e-6 && hermiticity_defect(s.as_ref()) > 1e-6 {
            let s_inv = s.partial_piv_lu().inverse();
            let lam = Mat::from_fn(d, d, |i, j| {
                if i == j {
                    c64::new(spectrum[i], 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            });
            return Ok(RealSpectrumFixture {
                matrix: &s * &lam * &s_inv,
                spectrum,
                condition,
            });
        }
        eps *= 0.7;
    }
    Err(Error::invalid("could not build a well-conditioned similarity transform"))
}
