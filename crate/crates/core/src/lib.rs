//! Exact and certified evaluation of q-Racah type rational functions, the
//! q⁻¹-Krawtchouk and q⁻¹-Al-Salam–Chihara families they are built from,
//! and the quantum-algebra identities behind them.
//!
//! Every evaluator is generic over [`Scalar`]: [`Exact`] rationals give
//! identically zero residuals, [`Real`] and [`Cplx`] floats give residuals
//! bounded by a tolerance.

pub mod error;
pub mod multivar;
pub mod orthopoly;
pub mod qseries;
pub mod ratfun;
pub mod report;
pub mod scalar;
pub mod suites;
pub mod uqsl2;

pub use error::{QError, Result};
pub use qseries::{Certified, TailBound};
pub use scalar::{Backend, Exponent, HalfInt, QBase, Scalar};

pub type Exact = num_rational::BigRational;
pub type Real = f64;
pub type Cplx = num_complex::Complex64;
