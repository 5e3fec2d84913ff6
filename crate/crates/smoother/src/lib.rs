//! Online particle smoothing with pseudo-marginal weights.
//!
//! The filter is a random-weight auxiliary particle filter: ancestors are
//! drawn proportionally to the previous weights, particles from a proposal
//! kernel, and each new weight is an unbiased *estimate*
//! `q_hat <zeta>(x_k, x_{k+1}) g_{k+1}(x_{k+1}, y_{k+1}) / p_k(x_k, x_{k+1})`.
//! Signed estimators are handled by Wald's trick: while any weight in the
//! system is nonpositive, a fresh estimator draw is added to *every* weight.
//! The stopped sums stay unbiased up to one common proportionality constant,
//! which cancels under self-normalization. Truncating or clipping instead
//! would bias the filter, so exceeding the round budget is a hard error.
//!
//! Smoothing works through per-particle backward statistics `tau_k^i`,
//! updated online. Three updates are provided:
//!
//! - [`SmoothingMethod::BackwardIS`]: for each particle, draw a small number
//!   of backward indices proportionally to the previous weights, positivize
//!   their estimator weights by the same Wald scheme, and take the
//!   self-normalized weighted update. No bound on the estimator is needed.
//! - [`SmoothingMethod::BackwardAR`]: the accept-reject backward sampler,
//!   which draws exactly from the particle backward kernel but requires an
//!   almost-sure upper bound on estimator draws and positivity by
//!   construction.
//! - [`SmoothingMethod::PathSpace`]: the ancestral-line (poor man's)
//!   smoother, kept as the baseline.
//!
//! All per-particle work draws from RNG streams addressed by
//! `(step, particle)`, so runs are bit-identical across thread counts.

pub mod config;
pub mod engine;
pub mod error;
pub mod increments;
pub mod update;
pub mod wald;

pub use config::{SmootherConfig, SmoothingMethod};
pub use engine::{path_space_smoother, smooth_online, step_with_increment, SmoothOutput, StepTrace};
pub use error::SmootherError;
pub use increments::BackwardIncrement;
pub use update::{update_backward_stats_ar, update_backward_stats_is, BackwardDraw};
pub use wald::{backward_weights_wald, init_filter, propagate_wald, WaldStats};
