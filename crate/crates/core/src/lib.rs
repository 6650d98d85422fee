//! Eigenstate-thermalization statistics for non-Hermitian random Hamiltonians.
//!
//! The crate samples Ginibre matrices and complex-fermion SYK models in the
//! half-filled Fock sector, builds biorthogonal eigendecompositions, and
//! measures local-observable matrix elements in the right-eigenvector basis
//! with the overlap correction `O~_mn = O_mn - G_mn O-bar`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod ethstats;
pub mod fock;
pub mod harness;
pub mod linalg;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use faer::{c64, Mat, MatRef};
