//! Unbiased transition-density estimators for partially observed SDEs.
//!
//! Particle smoothers for discretely observed diffusions need pointwise
//! *unbiased* estimates of the (intractable) transition density between
//! observation times. Two constructions are implemented:
//!
//! - [`gpe`]: the General Poisson Estimator for unit diffusions whose drift is
//!   the gradient of a potential `A`. Girsanov reduces the transition density
//!   to a Brownian-bridge expectation of `exp(-int psi)`, which a Poisson
//!   thinning product estimates without bias — and, because the integrand
//!   factors lie in `[0, 1]`, the estimate is *positive by construction*.
//!   The same machinery simulates the conditioned diffusion exactly
//!   ([`gpe::sample_diffusion_bridge`]) and yields an unbiased estimate of the
//!   parameter gradient of the log transition density
//!   ([`gpe::gpe_grad_log_transition`]).
//! - [`parametrix`]: an importance-sampling estimator built from Euler
//!   skeletons drawn at Poisson event times and reweighted by the mismatch of
//!   Kolmogorov forward operators. It applies to essentially arbitrary drift
//!   and state-dependent diffusion, but the estimate is *signed*: consumers
//!   must positivize (Wald's trick) before using it as a weight.
//!
//! Both estimators are pure functions of `(config, theta, endpoints, rng)`,
//! so concurrent use with independent rng streams is safe.

pub mod bridge;
pub mod error;
pub mod gpe;
pub mod parametrix;

pub use bridge::{bridge_value_at, sample_brownian_bridge_at, BridgeSkeleton};
pub use error::EstimatorError;
pub use gpe::{
    exact_diffusion_endpoint, gpe_grad_log_transition, gpe_transition_estimate,
    sample_diffusion_bridge, GpeConfig,
};
pub use parametrix::{parametrix_transition_estimate, ParametrixConfig};
