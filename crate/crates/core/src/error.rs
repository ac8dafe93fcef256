use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A conditioning step would divide by a (numerically) singular block.
    #[error("singular conditioning: {0}")]
    SingularConditioning(String),

    /// The small eigenvalue of Σ₀ coincides with one of the fixed
    /// eigenvalues, which changes the multiplicity pattern.
    #[error(
        "multiplicity collision: λ_s = {lambda_s} coincides with {fixed}; \
         rescale the model (see find_rescaling)"
    )]
    MultiplicityCollision { lambda_s: f64, fixed: f64 },

    /// Eigenvector matching between consecutive grid points was ambiguous.
    #[error("eigenpath assignment ambiguous at r = {r}: {detail}")]
    Path { r: f64, detail: String },

    /// A Monte Carlo ratio had an empty denominator.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// The circulant embedding of a covariance was not positive semi-definite.
    #[error("circulant embedding is not positive semi-definite: {0}")]
    Embedding(String),

    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
}
