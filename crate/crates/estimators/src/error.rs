use ssm_core::EstimateError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    /// Bridge times must be strictly increasing inside the open interval.
    #[error("bridge times not strictly increasing inside (0, {horizon}): t[{index}] = {value}")]
    BadTimes {
        index: usize,
        value: f64,
        horizon: f64,
    },
    /// A rejection sampler exhausted its proposal budget.
    #[error("rejection budget of {budget} proposals exceeded")]
    RejectionBudgetExceeded { budget: u64 },
    /// sigma*sigma^T failed its Cholesky factorization at a visited point.
    #[error("degenerate diffusion: sigma*sigma^T singular at a visited point")]
    DegenerateDiffusion,
}

impl From<EstimatorError> for EstimateError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::RejectionBudgetExceeded { budget } => {
                EstimateError::RejectionBudgetExceeded { budget }
            }
            EstimatorError::DegenerateDiffusion => EstimateError::DegenerateDiffusion,
            other => EstimateError::Model(other.to_string()),
        }
    }
}
