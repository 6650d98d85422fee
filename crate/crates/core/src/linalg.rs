//! Small dense-matrix helpers shared across modules.

use faer::{c64, Mat, MatRef};

pub fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

/// `||a - b||_F / ||b||_F`, or the absolute distance when `b` vanishes.
pub fn relative_frobenius(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let diff = (a - b).norm_l2();
    let scale = b.norm_l2();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Largest entry of `|a - a†|`.
pub fn hermiticity_defect(a: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.nrows(), a.ncols());
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn identity(d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            zero()
        }
    })
}

/// Diagonal of `a` if it is exactly diagonal.
pub fn exact_diagonal(a: MatRef<'_, c64>) -> Option<Vec<c64>> {
    if a.nrows() != a.ncols() {
        return None;
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if i != j && a[(i, j)] != zero() {
                return None;
            }
        }
    }
    Some((0..a.nrows()).map(|i| a[(i, i)]).collect())
}

/// `|psi><psi|` for a normalized copy of `psi`.
pub fn projector(psi: &[c64]) -> Mat<c64> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let d = psi.len();
    Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / (norm * norm))
}
