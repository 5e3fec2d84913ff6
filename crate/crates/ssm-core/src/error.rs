use thiserror::Error;

/// Errors from weight and particle-cloud operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// Every weight in the system is zero; nothing can be normalized or resampled.
    #[error("all weights are zero")]
    AllZeroWeights,
    /// A weight is NaN or infinite.
    #[error("non-finite weight {value} at index {index}")]
    NonFiniteWeight { index: usize, value: f64 },
}

/// Errors a randomized transition-density estimator can raise.
///
/// Lives here (rather than in the estimator crate) because the
/// [`StateSpaceModel`](crate::StateSpaceModel) trait must name it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    /// A rejection sampler exhausted its proposal budget.
    #[error("rejection budget of {budget} proposals exceeded")]
    RejectionBudgetExceeded { budget: u64 },
    /// The diffusion matrix sigma*sigma^T is singular at a visited point.
    #[error("degenerate diffusion: sigma*sigma^T singular at a visited point")]
    DegenerateDiffusion,
    /// Model-specific failure.
    #[error("model error: {0}")]
    Model(String),
}
