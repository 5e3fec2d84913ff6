//! Backward-statistic updates.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssm_core::math::kahan_sum;
use ssm_core::{normalize_weights, AdditiveFunctional, CoreError, ParticleCloud, StateSpaceModel};

use crate::config::SmootherConfig;
use crate::error::SmootherError;
use crate::increments::BackwardIncrement;

/// One backward sample: a source index `J` into the previous cloud and its
/// positivized estimator weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardDraw {
    pub index: usize,
    pub weight: f64,
}

/// Self-normalized backward importance-sampling update:
///
/// ```text
/// tau_next = sum_j (w_j / W) * (tau[J_j] + h_k(xi[J_j], target)),   W = sum_j w_j
/// ```
///
/// Any common scale on the draw weights cancels in the ratio. With a single
/// draw the update reduces to `tau[J] + h` exactly.
pub(crate) fn update_is_with<I: BackwardIncrement + ?Sized>(
    cloud: &ParticleCloud,
    target: &[f64],
    draws: &[BackwardDraw],
    increment: &I,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>, SmootherError> {
    let total = kahan_sum(draws.iter().map(|d| d.weight));
    if !total.is_finite() {
        return Err(CoreError::NonFiniteWeight {
            index: 0,
            value: total,
        }
        .into());
    }
    if total <= 0.0 {
        return Err(SmootherError::ZeroNormalizer);
    }
    let k = cloud.step();
    let dim = increment.dim();
    let mut out = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    for draw in draws {
        scratch.copy_from_slice(cloud.stat(draw.index));
        increment.add_increment(k, cloud.particle(draw.index), target, rng, &mut scratch)?;
        let ratio = draw.weight / total;
        for (o, s) in out.iter_mut().zip(&scratch) {
            *o += ratio * s;
        }
    }
    Ok(out)
}

/// [`update_is_with`] for a deterministic additive functional.
pub fn update_backward_stats_is<F: AdditiveFunctional>(
    cloud: &ParticleCloud,
    target: &[f64],
    draws: &[BackwardDraw],
    functional: &F,
) -> Result<Vec<f64>, SmootherError> {
    // Deterministic increments never touch the rng.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    update_is_with(cloud, target, draws, functional, &mut rng)
}

/// Accept-reject backward update: draw the backward indices exactly from the
/// particle backward kernel (propose `J ~ omega`, accept with probability
/// `q_hat<zeta> / eps_bar`) and average the unweighted updates.
///
/// Returns the updated statistic and the number of proposals consumed.
pub(crate) fn update_ar_with<M, I>(
    model: &M,
    cloud: &ParticleCloud,
    target: &[f64],
    cfg: &SmootherConfig,
    dist: &WeightedIndex<f64>,
    increment: &I,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, u64), SmootherError>
where
    M: StateSpaceModel + ?Sized,
    I: BackwardIncrement + ?Sized,
{
    let k = cloud.step();
    if !model.transition_estimate_is_positive() {
        return Err(SmootherError::EstimatorNotPositive);
    }

    // eps_bar_k^i: the almost-sure bound over all candidate sources, realized
    // as the max of per-pair bounds.
    let mut bound = 0.0f64;
    for i in 0..cloud.n_particles() {
        let b = model
            .transition_estimate_sup(k, cloud.particle(i), target)
            .ok_or(SmootherError::MissingArBound { step: k })?;
        bound = bound.max(b);
    }
    if bound <= 0.0 || !bound.is_finite() {
        return Err(SmootherError::ZeroNormalizer);
    }

    let dim = increment.dim();
    let kt = cfg.n_backward;
    let mut out = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut trials = 0u64;
    let scale = 1.0 / kt as f64;
    for _ in 0..kt {
        let accepted = loop {
            trials += 1;
            if trials > cfg.ar_max_trials {
                return Err(SmootherError::RejectionBudgetExceeded {
                    budget: cfg.ar_max_trials,
                });
            }
            let j = dist.sample(rng);
            let draw = model.transition_estimate(k, cloud.particle(j), target, rng)?;
            let ratio = draw.value / bound;
            if ratio > 1.0 + 1e-9 {
                return Err(SmootherError::InvalidBound {
                    value: draw.value,
                    bound,
                });
            }
            if rng.random_range(0.0..1.0) < ratio {
                break j;
            }
        };
        scratch.copy_from_slice(cloud.stat(accepted));
        increment.add_increment(k, cloud.particle(accepted), target, rng, &mut scratch)?;
        for (o, s) in out.iter_mut().zip(&scratch) {
            *o += scale * s;
        }
    }
    Ok((out, trials))
}

/// [`update_ar_with`] for a deterministic additive functional, building its
/// own resampling distribution.
pub fn update_backward_stats_ar<M, F>(
    model: &M,
    cloud: &ParticleCloud,
    target: &[f64],
    cfg: &SmootherConfig,
    rng: &mut ChaCha8Rng,
    functional: &F,
) -> Result<Vec<f64>, SmootherError>
where
    M: StateSpaceModel + ?Sized,
    F: AdditiveFunctional,
{
    let probs = normalize_weights(cloud.weights())?;
    let dist = WeightedIndex::new(&probs).map_err(|_| CoreError::AllZeroWeights)?;
    update_ar_with(model, cloud, target, cfg, &dist, functional, rng).map(|(stats, _)| stats)
}
