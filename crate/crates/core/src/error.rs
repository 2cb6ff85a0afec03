use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Shapes or dimensions do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    /// Cholesky factorization failed even at the largest jitter tried.
    #[error("covariance factorization failed (final jitter {jitter:e})")]
    Factorization { jitter: f64 },

    /// Input outside the declared domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    /// Evaluation protocol violated (metrics and summaries).
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
}
