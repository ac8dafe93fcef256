//! Numerics for closely paired critical points of isotropic Gaussian random
//! fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`covariance_core`] — radial models, partial derivatives of the
//!   covariance, the conditional covariance `Σ(t)` of
//!   `(∇²X(t), X(t), X(0))` given `∇X(t) = ∇X(0) = 0`, its small-`r`
//!   expansion, qualification checks and an independent oracle.
//! * [`eigen_structure`] — ordered eigen-decompositions, continuous
//!   eigenpaths in `r`, the spectrum of `Σ₀`, the `H(u)` matrix, the `B^v`
//!   determinants and the limit polynomial `h₀`.
//! * [`rice_mc`] — Monte Carlo Kac–Rice densities by Hessian index and the
//!   derived ratios (sign ratio, `Ψᵤ`, maxima share), plus projection points.
//! * [`field_lab`] — circulant-embedding simulation of planar fields,
//!   critical point extraction and pair statistics.

// `!(x > 0.0)` is used deliberately so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance_core;
pub mod eigen_structure;
pub mod error;
pub mod field_lab;
pub mod linalg;
pub mod rice_mc;

pub use error::{Error, Result};
