//! Biorthogonal eigendecomposition `H = sum_m eps_m |R_m><L_m|`.
//!
//! Right eigenvectors come from faer's complex eigensolver. They are sorted by
//! `(Re eps, Im eps)`, scaled to unit norm and rephased so that their
//! largest-modulus component is real and positive. The left vectors are then
//! the rows of `R^{-1}`, which enforces `<L_m|R_n> = delta_mn` at the level of
//! the linear solve.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{identity, relative_frobenius, trace};

/// Tunables for [`decompose_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Largest accepted `max |<L_m|R_n> - delta_mn|`.
    pub pairing_threshold: f64,
    /// Largest accepted eigenvalue condition number `||L_m|| ||R_m||`.
    pub max_condition: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            pairing_threshold: 1e-8,
            max_condition: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<c64>,
    /// Column `m` is `|R_m>`.
    right: Mat<c64>,
    /// Row `m` is `<L_m|`.
    left: Mat<c64>,
    residual: f64,
    pairing_error: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    /// `w_m = Re eps_m`.
    pub fn energy(&self, m: usize) -> f64 {
        self.eigenvalues[m].re
    }

    /// `s_m = Im eps_m`, the growth (decay if negative) rate.
    pub fn rate(&self, m: usize) -> f64 {
        self.eigenvalues[m].im
    }

    pub fn right(&self) -> MatRef<'_, c64> {
        self.right.as_ref()
    }

    pub fn left(&self) -> MatRef<'_, c64> {
        self.left.as_ref()
    }

    /// `max_m ||(H - eps_m) |R_m>||_2`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max_{mn} |<L_m|R_n> - delta_mn|`.
    pub fn pairing_error(&self) -> f64 {
        self.pairing_error
    }

    /// Eigenvalue condition numbers `||L_m|| ||R_m||` (`>= 1`).
    pub fn condition_numbers(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|m| self.left.row(m).norm_l2() * self.right.col(m).norm_l2())
            .collect()
    }

    /// Multiplies `|R_m>` by `phases[m]` and `<L_m|` by its inverse.
    ///
    /// Every gauge-invariant quantity must be unchanged by this.
    pub fn rephased(&self, phases: &[c64]) -> Result<Self> {
        if phases.len() != self.dim() {
            return Err(Error::invalid("one phase per eigenvector required"));
        }
        let d = self.dim();
        let right = Mat::from_fn(d, d, |i, m| self.right[(i, m)] * phases[m]);
        let left = Mat::from_fn(d, d, |m, j| self.left[(m, j)] / phases[m]);
        Ok(Self {
            eigenvalues: self.eigenvalues.clone(),
            right,
            left,
            residual: self.residual,
            pairing_error: self.pairing_error,
        })
    }

    /// JSON-friendly summary: eigenvalues as `[re, im]` pairs plus diagnostics.
    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            dim: self.dim(),
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            residual: self.residual,
            pairing_error: self.pairing_error,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub dim: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub residual: f64,
    pub pairing_error: f64,
}

pub fn decompose(h: MatRef<'_, c64>) -> Result<SpectralDecomposition> {
    decompose_with(h, &SpectralOptions::default())
}

pub fn decompose_with(h: MatRef<'_, c64>, opts: &SpectralOptions) -> Result<SpectralDecomposition> {
    let d = h.nrows();
    if d != h.ncols() {
        return Err(Error::invalid(format!(
            "decompose expects a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if d == 0 {
        return Err(Error::invalid("decompose expects a non-empty matrix"));
    }
    for j in 0..d {
        for i in 0..d {
            let z = h[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }

    let evd = h
        .eigen()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let raw_vals: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    let raw_vecs = evd.U();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        raw_vals[a]
            .re
            .total_cmp(&raw_vals[b].re)
            .then(raw_vals[a].im.total_cmp(&raw_vals[b].im))
    });
    let eigenvalues: Vec<c64> = order.iter().map(|&k| raw_vals[k]).collect();

    let mut right = Mat::<c64>::zeros(d, d);
    for (m, &k) in order.iter().enumerate() {
        let col = raw_vecs.col(k);
        let norm = col.norm_l2();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ExceptionalPoint {
                index: m,
                condition: f64::INFINITY,
            });
        }
        // gauge: largest-modulus component real and positive
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..d {
            let a = col[i].norm();
            if a > best {
                best = a;
                pivot = i;
            }
        }
        let phase = col[pivot] / col[pivot].norm();
        let scale = phase.conj() / norm;
        for i in 0..d {
            right[(i, m)] = col[i] * scale;
        }
        right[(pivot, m)] = c64::new(right[(pivot, m)].norm(), 0.0);
    }

    let left = right.partial_piv_lu().inverse();

    let pairing = &left * &right - identity(d);
    let mut pairing_error: f64 = 0.0;
    let mut worst = 0;
    for m in 0..d {
        for n in 0..d {
            let e = pairing[(m, n)].norm();
            if !(e <= pairing_error) {
                pairing_error = if e.is_nan() { f64::INFINITY } else { e };
                worst = m;
            }
        }
    }
    let conditions: Vec<f64> = (0..d)
        .map(|m| {
            let c = left.row(m).norm_l2();
            if c.is_nan() {
                f64::INFINITY
            } else {
                c
            }
        })
        .collect();
    let (cond_idx, cond_max) = conditions
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, c)| {
            if !(c <= acc.1) {
                (i, if c.is_nan() { f64::INFINITY } else { c })
            } else {
                acc
            }
        });
    if pairing_error > opts.pairing_threshold {
        return Err(Error::ExceptionalPoint {
            index: worst,
            condition: conditions[worst],
        });
    }
    if cond_max > opts.max_condition {
        return Err(Error::ExceptionalPoint {
            index: cond_idx,
            condition: cond_max,
        });
    }

    let hr = h * &right;
    let mut residual: f64 = 0.0;
    for m in 0..d {
        let mut acc = 0.0;
        for i in 0..d {
            acc += (hr[(i, m)] - right[(i, m)] * eigenvalues[m]).norm_sqr();
        }
        residual = residual.max(acc.sqrt());
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        right,
        left,
        residual,
        pairing_error,
    })
}

/// The overlap matrix `G_mn = <R_m|R_n>` of the right eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapGram(Mat<c64>);

impl OverlapGram {
    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn get(&self, m: usize, n: usize) -> c64 {
        self.0[(m, n)]
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Largest `|G_mn|` with `m != n`.
    pub fn max_offdiag(&self) -> f64 {
        let d = self.dim();
        let mut best: f64 = 0.0;
        for n in 0..d {
            for m in 0..d {
                if m != n {
                    best = best.max(self.0[(m, n)].norm());
                }
            }
        }
        best
    }
}

pub fn overlap_gram(dec: &SpectralDecomposition) -> OverlapGram {
    OverlapGram(dec.right.adjoint() * &dec.right)
}

/// `sum_m eps_m |R_m><L_m|`.
pub fn reconstruct(dec: &SpectralDecomposition) -> Mat<c64> {
    let d = dec.dim();
    let scaled = Mat::from_fn(d, d, |i, m| dec.right[(i, m)] * dec.eigenvalues[m]);
    &scaled * &dec.left
}

/// Relative Frobenius distance between the reconstruction and `h`.
pub fn reconstruction_error(dec: &SpectralDecomposition, h: MatRef<'_, c64>) -> f64 {
    relative_frobenius(reconstruct(dec).as_ref(), h)
}

/// `|sum_m eps_m - tr H|`.
pub fn trace_defect(dec: &SpectralDecomposition, h: MatRef<'_, c64>) -> f64 {
    (dec.eigenvalues.iter().copied().sum::<c64>() - trace(h)).norm()
}
