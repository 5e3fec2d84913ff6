use ssm_core::{CoreError, EstimateError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmootherError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Estimate(#[from] EstimateError),

    /// The Wald positivization loop did not clear its round budget. This
    /// signals an estimator whose positive mass is too small for the model
    /// point reached; truncating instead would bias the weights.
    #[error("Wald positivization exceeded {max_rounds} rounds at step {step}")]
    WaldBudgetExceeded { step: usize, max_rounds: usize },

    /// Backward weights summed to zero or below; the self-normalized update
    /// is undefined.
    #[error("backward weight normalizer is zero")]
    ZeroNormalizer,

    /// An accept-reject draw produced an acceptance probability above one:
    /// the supplied bound is not an almost-sure bound. Hard error, because
    /// sampling would silently stop targeting the backward kernel.
    #[error("estimator draw {value} exceeds its stated bound {bound}")]
    InvalidBound { value: f64, bound: f64 },

    /// The accept-reject method needs `transition_estimate_sup` from the model.
    #[error("model provides no estimator bound for the accept-reject sampler (step {step})")]
    MissingArBound { step: usize },

    /// The accept-reject method needs a positivity-flagged estimator.
    #[error("accept-reject backward sampling requires a positive-by-construction estimator")]
    EstimatorNotPositive,

    /// The accept-reject sampler exhausted its trial budget.
    #[error("accept-reject trial budget of {budget} exceeded")]
    RejectionBudgetExceeded { budget: u64 },

    #[error("at least one observation is required")]
    NoObservations,
}
