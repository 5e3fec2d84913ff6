//! Core types for sequential Monte Carlo in state space models with
//! intractable transition densities.
//!
//! A state space model is a latent Markov chain `X_k` in `R^d` observed
//! through conditionally independent `Y_k` in `R^m`. This crate holds the
//! pieces every other crate in the workspace builds on:
//!
//! - [`StateSpaceModel`]: the pluggable model abstraction. Instead of a
//!   closed-form transition density, a model supplies an *unbiased randomized
//!   estimator* of it (`transition_estimate`), which is what makes
//!   pseudo-marginal filtering and smoothing possible.
//! - [`AdditiveFunctional`]: smoothing targets of the form
//!   `H(x_{0:n}) = sum_k h_k(x_k, x_{k+1})`.
//! - [`ParticleCloud`]: a weighted particle system together with the
//!   per-particle backward statistics carried by online smoothers.
//! - weight utilities ([`normalize_weights`], [`ess`], [`multinomial_indices`],
//!   [`weighted_mean`]) shared by the filtering and smoothing recursions.
//! - [`RngFactory`]: derived, addressable RNG streams so that results are
//!   bit-reproducible regardless of scheduling or thread count.
//!
//! Weights are kept in linear (not log) space throughout: positivization by
//! Wald's trick sums raw density-estimate draws, which has no log-space
//! analogue. Overflow is controlled by normalizing resampling probabilities
//! at every step.

pub mod cloud;
pub mod error;
pub mod functional;
pub mod math;
pub mod model;
pub mod rng;
pub mod weights;

pub use cloud::ParticleCloud;
pub use error::{CoreError, EstimateError};
pub use functional::{AdditiveFunctional, AllStates, StateAt, StateMean, StepCount};
pub use model::{DensityDraw, ModelFamily, StateSpaceModel};
pub use rng::RngFactory;
pub use weights::{ess, multinomial_indices, normalize_weights, weighted_mean};
