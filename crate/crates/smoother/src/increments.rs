//! Increment sources for the backward-statistic recursion.
//!
//! Plain additive functionals have deterministic increments. Recursive
//! maximum likelihood plugs in *estimated* increments (one draw of an
//! unbiased gradient estimator per backward sample), so the smoother's
//! update machinery is written against this slightly wider trait.

use rand::RngCore;
use ssm_core::{AdditiveFunctional, EstimateError};

/// A per-step increment, possibly randomized.
pub trait BackwardIncrement: Send + Sync {
    fn dim(&self) -> usize;

    /// Add the increment value for step `k` over the pair `(x, x_next)` into
    /// `acc`.
    fn add_increment(
        &self,
        k: usize,
        x: &[f64],
        x_next: &[f64],
        rng: &mut dyn RngCore,
        acc: &mut [f64],
    ) -> Result<(), EstimateError>;
}

impl<F: AdditiveFunctional> BackwardIncrement for F {
    fn dim(&self) -> usize {
        self.out_dim()
    }

    fn add_increment(
        &self,
        k: usize,
        x: &[f64],
        x_next: &[f64],
        _rng: &mut dyn RngCore,
        acc: &mut [f64],
    ) -> Result<(), EstimateError> {
        AdditiveFunctional::add_increment(self, k, x, x_next, acc);
        Ok(())
    }
}
