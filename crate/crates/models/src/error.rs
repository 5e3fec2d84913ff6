use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A covariance matrix failed its Cholesky factorization.
    #[error("singular covariance matrix")]
    SingularCovariance,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A simulated abundance path hit the positivity floor and could not be
    /// regenerated within the retry budget.
    #[error("simulated state hit the positivity floor at t = {time}")]
    PositivityViolation { time: f64 },

    #[error("{0}")]
    Domain(String),
}
