//! Exact covariance machinery for an isotropic field `X` on `R^N` with
//! `Cov[X(s), X(t)] = ρ(‖s − t‖²)`.

mod conditional;
mod expansion;
mod model;
mod oracle;
mod partials;
mod qualify;
mod symvec;

pub use conditional::{conditional_covariance, CondCov, KCoefficients};
pub use expansion::{sigma0_permutation, sigma_expansion, SigmaExpansion};
pub use model::{
    find_rescaling, rescale, CauchyProfile, ClosureProfile, GaussianProfile, ModelFamily, RadialFn,
    RadialModel, RadialProfile, DEFAULT_VALIDITY_RADIUS,
};
pub use oracle::{conditional_covariance_oracle, joint_covariance, JointComponent};
pub use partials::{cov_partials, third_derivative_variance};
pub use qualify::{check_qualified, QualCheck, QualReport};
pub use symvec::{cond_len, matriculate, sym_index, sym_len, tau_index, vectorize_sym, SymVec};

/// Unit vector `u₀ = (0, …, 0, 1)` used throughout as the reference direction.
pub fn reference_direction(n_dim: usize) -> Vec<f64> {
    let mut u = vec![0.0; n_dim];
    u[n_dim - 1] = 1.0;
    u
}
