//! Half-filled fermionic Fock basis and fermion-string operators.
//!
//! Conventions: bit `i` of a state's integer encodes the occupation of mode
//! `i`. Annihilating or creating a fermion in mode `j` picks up the sign
//! `(-1)^(number of occupied modes k < j)`. Basis states are ordered by
//! ascending integer value. Textual bitstrings are written mode 0 first, i.e.
//! `"10"` is the two-mode state with mode 0 occupied.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};

use crate::error::{Error, Result};

/// Largest supported number of modes; `binomial(20, 10) = 184756`.
pub const MAX_MODES: usize = 20;

/// An occupation bitstring of fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    bits: u32,
    len: usize,
}

impl Bitstring {
    pub fn new(bits: u32, len: usize) -> Result<Self> {
        if len > 32 || (len < 32 && bits >> len != 0) {
            return Err(Error::invalid(format!(
                "bits {bits:#b} do not fit in {len} modes"
            )));
        }
        Ok(Self { bits, len })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn occupied(&self, mode: usize) -> bool {
        mode < self.len && (self.bits >> mode) & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.bits.count_ones()
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u32;
        let mut len = 0usize;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => {
                    if i >= 32 {
                        return Err(Error::invalid("bitstring longer than 32 modes"));
                    }
                    bits |= 1 << i;
                }
                _ => return Err(Error::invalid(format!("bad occupation character {ch:?}"))),
            }
            len = i + 1;
        }
        Bitstring::new(bits, len)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.occupied(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Number of positions in which two equal-length bitstrings differ.
pub fn hamming_distance(a: &Bitstring, b: &Bitstring) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::invalid(format!(
            "hamming distance of bitstrings with lengths {} and {}",
            a.len, b.len
        )));
    }
    Ok((a.bits ^ b.bits).count_ones())
}

/// The half-filling sector of `n_modes` spinless fermionic modes.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_modes: usize,
    states: Vec<u32>,
    index_of: HashMap<u32, usize>,
}

/// Enumerates all `n_modes`-bit states with exactly `n_modes / 2` ones, in
/// ascending integer order.
pub fn enumerate_half_filling(n_modes: usize) -> Result<FockBasis> {
    if !n_modes.is_multiple_of(2) || !(2..=MAX_MODES).contains(&n_modes) {
        return Err(Error::invalid(format!(
            "n_modes must be even with 2 <= n_modes <= {MAX_MODES}, got {n_modes}"
        )));
    }
    let half = (n_modes / 2) as u32;
    let states: Vec<u32> = (0u32..(1u32 << n_modes))
        .filter(|s| s.count_ones() == half)
        .collect();
    let index_of = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    Ok(FockBasis {
        n_modes,
        states,
        index_of,
    })
}

impl FockBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Hilbert-space dimension `binomial(N, N/2)`.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, k: usize) -> Bitstring {
        Bitstring {
            bits: self.states[k],
            len: self.n_modes,
        }
    }

    pub fn index_of(&self, bits: u32) -> Option<usize> {
        self.index_of.get(&bits).copied()
    }

    /// Hamming distance between basis states `a` and `b` (by index).
    pub fn hamming(&self, a: usize, b: usize) -> u32 {
        (self.states[a] ^ self.states[b]).count_ones()
    }
}

/// A normal-ordered fermion string `c†_{a1} c†_{a2} ... c_{b1} c_{b2} ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FermionString {
    creations: Vec<usize>,
    annihilations: Vec<usize>,
}

impl FermionString {
    pub fn new(creations: Vec<usize>, annihilations: Vec<usize>) -> Result<Self> {
        if creations.len() != annihilations.len() {
            return Err(Error::invalid(format!(
                "fermion string must conserve particle number: {} creations vs {} annihilations",
                creations.len(),
                annihilations.len()
            )));
        }
        Ok(Self {
            creations,
            annihilations,
        })
    }

    pub fn creations(&self) -> &[usize] {
        &self.creations
    }

    pub fn annihilations(&self) -> &[usize] {
        &self.annihilations
    }

    /// Hermitian conjugate: `(c†_a1 c†_a2 c_b1 c_b2)† = c†_b2 c†_b1 c_a2 c_a1`.
    pub fn adjoint(&self) -> Self {
        Self {
            creations: self.annihilations.iter().rev().copied().collect(),
            annihilations: self.creations.iter().rev().copied().collect(),
        }
    }

    fn max_mode(&self) -> Option<usize> {
        self.creations
            .iter()
            .chain(&self.annihilations)
            .copied()
            .max()
    }

    /// Applies the string to a Fock state; `None` if the result vanishes.
    pub fn apply(&self, state: u32) -> Option<(f64, u32)> {
        let mut s = state;
        let mut sign = 1.0;
        for &j in self.annihilations.iter().rev() {
            let (sg, next) = annihilate(s, j)?;
            sign *= sg;
            s = next;
        }
        for &i in self.creations.iter().rev() {
            let (sg, next) = create(s, i)?;
            sign *= sg;
            s = next;
        }
        Some((sign, s))
    }
}

#[inline]
fn parity_below(state: u32, mode: usize) -> f64 {
    let mask = (1u32 << mode) - 1;
    if (state & mask).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `c_j |s>`: sign and resulting state, or `None` if mode `j` is empty.
#[inline]
pub fn annihilate(state: u32, j: usize) -> Option<(f64, u32)> {
    if (state >> j) & 1 == 0 {
        return None;
    }
    Some((parity_below(state, j), state & !(1 << j)))
}

/// `c†_i |s>`: sign and resulting state, or `None` if mode `i` is occupied.
#[inline]
pub fn create(state: u32, i: usize) -> Option<(f64, u32)> {
    if (state >> i) & 1 == 1 {
        return None;
    }
    Some((parity_below(state, i), state | (1 << i)))
}

/// Dense matrix of a fermion string restricted to the half-filled sector.
pub fn operator_matrix(spec: &FermionString, basis: &FockBasis) -> Result<Mat<c64>> {
    if let Some(m) = spec.max_mode() {
        if m >= basis.n_modes {
            return Err(Error::invalid(format!(
                "mode index {m} out of range for {} modes",
                basis.n_modes
            )));
        }
    }
    let d = basis.dim();
    let mut out = Mat::<c64>::zeros(d, d);
    for (b, &s) in basis.states.iter().enumerate() {
        if let Some((sign, t)) = spec.apply(s) {
            let a = basis
                .index_of(t)
                .expect("number-conserving string stays in the half-filled sector");
            out[(a, b)] += c64::new(sign, 0.0);
        }
    }
    Ok(out)
}

/// Occupations of mode `i` across the basis, i.e. the diagonal of `n_i`.
pub fn number_diagonal(i: usize, basis: &FockBasis) -> Result<Vec<f64>> {
    if i >= basis.n_modes {
        return Err(Error::invalid(format!(
            "mode index {i} out of range for {} modes",
            basis.n_modes
        )));
    }
    Ok(basis
        .states
        .iter()
        .map(|s| ((s >> i) & 1) as f64)
        .collect())
}

/// The single-mode number operator `n_i = c†_i c_i`.
pub fn number_operator(i: usize, basis: &FockBasis) -> Result<Mat<c64>> {
    let diag = number_diagonal(i, basis)?;
    let d = diag.len();
    Ok(Mat::from_fn(d, d, |r, c| {
        if r == c {
            c64::new(diag[r], 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    }))
}
