//! Exact non-local hydrodynamic closure of the linear one-dimensional BGK
//! equation.
//!
//! The density mode with wave number `k` relaxes onto the slow eigenvector
//! of the moment operator `T(k)`, whose eigenvalue `lambda*(k, tau)` solves
//! `sqrt(pi/2) erfcx(x) = k tau` with `lambda* = -1/tau + sqrt(2) k x`.
//!
//! * [`specfun`]: erf, erfc, erfcx, Dawson, Faddeeva `w`.
//! * [`dispersion`]: the slow eigenvalue, `k_crit`, small-`tau` series.
//! * [`operator`]: truncated moment operators and slow eigenvectors.
//! * [`ce_expansion`]: exact Chapman-Enskog recursion.
//! * [`evolution`]: closure, Chapman-Enskog and kinetic time evolution.

pub mod ce_expansion;
pub mod dispersion;
pub mod error;
pub mod evolution;
pub mod operator;
pub mod specfun;
mod tridiag;

pub use error::{Error, Result};
pub use num_complex::Complex64;
