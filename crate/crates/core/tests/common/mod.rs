//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nheth::{c64, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Dense real matrix as nested rows, kept separate from the library types.
pub type Dense = Vec<Vec<f64>>;

fn eye(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            if a[i][p] != 0.0 {
                for j in 0..m {
                    out[i][j] += a[i][p] * b[p][j];
                }
            }
        }
    }
    out
}

fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Annihilator of `mode` on the full `2^n` Fock space, built as a Kronecker
/// product of 2x2 factors. The factor order puts mode `n-1` leftmost so the
/// row index is `sum_i occupation_i 2^i`; string factors `Z` act on modes
/// below `mode`.
pub fn full_annihilator(n: usize, mode: usize) -> Dense {
    let a = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
    let z = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
    let id = eye(2);
    let mut out = vec![vec![1.0]];
    for k in (0..n).rev() {
        let f = if k == mode {
            &a
        } else if k < mode {
            &z
        } else {
            &id
        };
        out = kron(&out, f);
    }
    out
}

/// `c+_{i1} c+_{i2} ... c_{j1} c_{j2} ...` on the full Fock space.
pub fn full_string(n: usize, creations: &[usize], annihilations: &[usize]) -> Dense {
    let mut out = eye(1 << n);
    for &i in creations {
        out = matmul(&out, &transpose(&full_annihilator(n, i)));
    }
    for &j in annihilations {
        out = matmul(&out, &full_annihilator(n, j));
    }
    out
}

/// Restriction of a full-space operator to the half-filled states in
/// ascending integer order.
pub fn half_filled_block(n: usize, full: &Dense) -> Dense {
    let states: Vec<usize> = (0..1usize << n).filter(|s| s.count_ones() as usize == n / 2).collect();
    states
        .iter()
        .map(|&a| states.iter().map(|&b| full[a][b]).collect())
        .collect()
}

pub fn ginibre(d: usize, seed: u64) -> Mat<c64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let s = (0.5 / d as f64).sqrt();
    Mat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re * s, im * s)
    })
}

pub fn gue(d: usize, seed: u64) -> Mat<c64> {
    let g = ginibre(d, seed);
    Mat::from_fn(d, d, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5f64.sqrt())
}

pub fn matmul_c(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (n, k, m) = (a.nrows(), a.ncols(), b.ncols());
    Mat::from_fn(n, m, |i, j| (0..k).map(|p| a[(i, p)] * b[(p, j)]).sum())
}

pub fn adjoint(a: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn scale(a: MatRef<'_, c64>, s: c64) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn fro(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn rel_fro(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let d = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]);
    fro(d.as_ref()) / fro(b)
}

/// `e^A` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: MatRef<'_, c64>) -> Mat<c64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm1 / f64::powi(2.0, s) > 0.25 {
        s += 1;
    }
    let scaled = scale(a, c(f64::powi(2.0, -s), 0.0));
    let mut term = Mat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let mut sum = term.clone();
    for k in 1..=24 {
        term = scale(matmul_c(term.as_ref(), scaled.as_ref()).as_ref(), c(1.0 / k as f64, 0.0));
        sum = Mat::from_fn(n, n, |i, j| sum[(i, j)] + term[(i, j)]);
    }
    for _ in 0..s {
        sum = matmul_c(sum.as_ref(), sum.as_ref());
    }
    sum
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: MatRef<'_, c64>) -> c64 {
    let n = a.nrows();
    let mut m: Vec<Vec<c64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut det = c(1.0, 0.0);
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let piv = m[col][col];
        det *= piv;
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / piv;
            for (x, &v) in row.iter_mut().zip(pivot_row).skip(col) {
                *x -= f * v;
            }
        }
    }
    det
}
