//! Kac–Rice densities of critical points close to a critical point above a
//! threshold, estimated by Monte Carlo over the conditional Gaussian law of
//! `(∇²X(t), X(t), X(0))`.
//!
//! All estimators share one sample per call, so index densities, sign
//! classes and their ratios are mutually consistent. Sampling is split into
//! fixed-size blocks with their own counter-based RNG stream, which makes
//! every result independent of the number of worker threads.

mod estimate;
mod index;
mod law;
mod normal;
mod projection;

pub use estimate::{
    critical_density_mc, critical_sums, maxima_share, maxima_share_with, psi_ratio, psi_ratio_with,
    rice_density_mc, rice_density_with, rice_sums, sign_ratio, sign_ratio_with, EstimateKind,
    McConfig, RiceEstimate, RiceSums, BLOCK_PAIRS,
};
pub use index::{classify_vech, hessian_index, HessianIndex};
pub use law::{Factor, Sampler};
pub use normal::{upper_tail, upper_tail_inv};
pub use projection::{projection_point, ProjectionDiag, ProjectionKind};
