use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A distribution-valued covariance was evaluated pointwise.
    #[error("{0}: distributional covariance; use weighted quadrature")]
    Distributional(&'static str),

    /// Evaluation requested within the singularity tolerance of a pole.
    #[error("singularity: {0}")]
    Singularity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The covariance specification violates its regime constraints.
    #[error("inadmissible spec: {0}")]
    Inadmissible(String),

    /// Circulant embedding produced too much negative spectral mass.
    #[error("grid too coarse for this covariance: negative spectral mass fraction {0:.3e}")]
    EmbeddingFailed(f64),

    /// Finite-difference blow-up past the overflow guard.
    #[error("numeric instability at step {step}: |u| exceeded {guard:e}")]
    Unstable { step: usize, guard: f64 },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{0}")]
    Invalid(String),
}
