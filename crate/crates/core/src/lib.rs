//! Locally AW*-algebras realized as projective limits of finite-dimensional
//! C*-algebras, with verifiers for their annihilator, lattice and spectral
//! structure.

// NaN residuals must fail checks, so `!(r <= tol)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::op_ref)]

pub mod annihil;
pub mod cli;
pub mod error;
pub mod lawstruct;
pub mod limits;
pub mod linear;
pub mod matstar;
pub mod projlat;
pub mod random;
pub mod report;
pub mod spectral;
pub mod tol;

pub use error::{Error, Result};
