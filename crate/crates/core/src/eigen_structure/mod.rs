//! Spectral structure of `Σ_u(r)` as the pair distance `r → 0`.

mod catalogue;
mod eigenpath;
mod hmatrix;
mod limit;

pub use crate::linalg::ordered_eigendecomposition;
pub use catalogue::{spectrum_sigma0, CatalogueEntry, SpectralCatalogue};
pub use eigenpath::{eigenpath, EigenpathPoint, SpectralExpansion, DEFAULT_R_GRID};
pub use hmatrix::{
    bv_determinant, bv_symmetrized, classify_scaling, h_matrix, scaling_class, ScalingClass,
    ScalingReport, SCALING_GRID, SCALING_RADII,
};
pub use limit::{h_r, h_r_from, limit_polynomial, LimitPolynomial};
