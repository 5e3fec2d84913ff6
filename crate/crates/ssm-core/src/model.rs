//! The pluggable state space model abstraction.
//!
//! The key departure from a textbook particle filter interface is
//! [`StateSpaceModel::transition_estimate`]: instead of evaluating the
//! transition density `q_k(x, x')`, the model draws an auxiliary variable
//! `zeta ~ R_k(x, x'; .)` and returns `q_hat<zeta>(x, x')`, an estimate that
//! is unbiased conditionally on `(x, x')`. Filtering and smoothing weights are
//! built from such draws; estimators that can go negative are positivized
//! downstream by Wald's trick, never clipped.

use rand::RngCore;

use crate::error::EstimateError;

/// One realization of an unbiased transition-density estimator: the value
/// `q_hat<zeta>(x, x')` plus a size diagnostic for the auxiliary variable.
///
/// `value` may be negative for signed estimators (e.g. parametrix); it is
/// the caller's job to positivize where positivity is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDraw {
    /// The density estimate itself. Must be finite.
    pub value: f64,
    /// Number of auxiliary events behind the draw (Poisson bridge points,
    /// parametrix skeleton events, ...). Diagnostics only.
    pub aux_events: u32,
}

impl DensityDraw {
    pub fn new(value: f64, aux_events: u32) -> Self {
        DensityDraw { value, aux_events }
    }

    /// A draw from an exact (deterministic) density, used when the model is
    /// tractable and the pseudo-marginal machinery degenerates to classic SMC.
    pub fn exact(value: f64) -> Self {
        DensityDraw {
            value,
            aux_events: 0,
        }
    }
}

/// A state space model as consumed by the filter and smoothers.
///
/// Densities are with respect to Lebesgue measure. Observations enter three
/// ways: the next observation is threaded explicitly through the proposal
/// (`sample_proposal` / `proposal_density`), models whose dynamics depend on
/// past observations capture the observation sequence at construction, and
/// the time-zero observation may be folded into [`initial_density_ratio`] by
/// models that condition their initial proposal on it.
pub trait StateSpaceModel: Send + Sync {
    /// Dimension d of the latent state.
    fn state_dim(&self) -> usize;
    /// Dimension m of one observation.
    fn obs_dim(&self) -> usize;
    /// Dimension q of the parameter vector (0 for fixed-parameter models).
    fn param_dim(&self) -> usize {
        0
    }

    /// Draw x_0 from the initial proposal density rho_0.
    fn sample_initial(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// chi(x) / rho_0(x), the time-zero importance weight. Nonnegative.
    fn initial_density_ratio(&self, x: &[f64]) -> f64;

    /// Draw x_{k+1} from the proposal kernel p_k(x_k, .), which may use the
    /// next observation y_{k+1}.
    fn sample_proposal(
        &self,
        k: usize,
        x: &[f64],
        y_next: &[f64],
        rng: &mut dyn RngCore,
    ) -> Vec<f64>;

    /// Density of the proposal kernel p_k(x_k, x_{k+1}). Strictly positive
    /// wherever `sample_proposal` can land.
    fn proposal_density(&self, k: usize, x: &[f64], x_next: &[f64], y_next: &[f64]) -> f64;

    /// Observation density g_k(x_k, y_k). Nonnegative.
    fn obs_density(&self, k: usize, x: &[f64], y: &[f64]) -> f64;

    /// Gradient of g_k with respect to the model parameters, when the
    /// observation density depends on them. `None` means "no dependence"
    /// (a zero gradient), not "unavailable".
    fn obs_density_grad(&self, _k: usize, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Draw zeta ~ R_k(x, x'; .) and evaluate q_hat<zeta>(x, x') jointly.
    /// Unbiased for the transition density q_k(x, x') given (x, x').
    fn transition_estimate(
        &self,
        k: usize,
        x: &[f64],
        x_next: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<DensityDraw, EstimateError>;

    /// True when every draw of `transition_estimate` is >= 0 by construction
    /// (e.g. Poisson estimators); false for signed estimators (parametrix).
    fn transition_estimate_is_positive(&self) -> bool;

    /// Almost-sure upper bound on `transition_estimate` draws at (x, x'),
    /// i.e. `sup_zeta q_hat<zeta>(x, x')`. Required by the accept-reject
    /// backward sampler; `None` when no bound is available.
    fn transition_estimate_sup(&self, _k: usize, _x: &[f64], _x_next: &[f64]) -> Option<f64> {
        None
    }

    /// Unbiased estimate of the parameter gradient of the log transition
    /// density, `grad_theta log q_k(x, x')`. `Ok(None)` when the model does
    /// not support score estimation.
    fn grad_log_transition_estimate(
        &self,
        _k: usize,
        _x: &[f64],
        _x_next: &[f64],
        _rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<f64>>, EstimateError> {
        Ok(None)
    }
}

/// A parametric family theta -> model, as consumed by recursive maximum
/// likelihood. Building a model must be cheap; it happens once per update.
pub trait ModelFamily: Send + Sync {
    type Model: StateSpaceModel;

    fn param_dim(&self) -> usize;

    fn model_at(&self, theta: &[f64]) -> Self::Model;
}
