//! Random-weight particle filtering with Wald positivization.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ssm_core::{normalize_weights, CoreError, ParticleCloud, RngFactory, StateSpaceModel};

use crate::config::SmootherConfig;
use crate::error::SmootherError;

// Stream tags; combined with (step, particle) they address every RNG stream
// the smoother consumes.
pub(crate) const TAG_INIT: u64 = 1;
pub(crate) const TAG_ANCESTOR: u64 = 2;
pub(crate) const TAG_PROPAGATE: u64 = 3;
pub(crate) const TAG_BACKWARD: u64 = 4;

/// Diagnostics from one Wald propagation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaldStats {
    /// Rounds of the positivization loop (1 for positive estimators).
    pub rounds: usize,
    /// Total transition-estimator invocations.
    pub estimator_calls: u64,
}

/// New particles for one step, before backward statistics are attached.
pub(crate) struct Propagated {
    pub step: usize,
    pub particles: Vec<f64>,
    pub weights: Vec<f64>,
    pub ancestors: Vec<usize>,
}

fn check_weight(index: usize, value: f64) -> Result<(), SmootherError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CoreError::NonFiniteWeight { index, value }.into())
    }
}

/// Draw the initial cloud: N i.i.d. particles from the initial proposal with
/// weights `chi(x)/rho_0(x)` and zeroed backward statistics of dimension
/// `stat_dim`.
pub fn init_filter<M: StateSpaceModel + ?Sized>(
    model: &M,
    stat_dim: usize,
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<ParticleCloud, SmootherError> {
    let n = cfg.n_particles;
    let d = model.state_dim();
    let mut particles = vec![0.0; n * d];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut rng = factory.stream(&[TAG_INIT, i as u64]);
        let x = model.sample_initial(&mut rng);
        debug_assert_eq!(x.len(), d);
        let w = model.initial_density_ratio(&x);
        check_weight(i, w)?;
        particles[i * d..(i + 1) * d].copy_from_slice(&x);
        weights[i] = w;
    }
    if weights.iter().all(|&w| w <= 0.0) {
        return Err(CoreError::AllZeroWeights.into());
    }
    Ok(ParticleCloud::initial(d, stat_dim, particles, weights))
}

struct ParticleSlot {
    rng: ChaCha8Rng,
    ancestor: usize,
    particle: Vec<f64>,
    /// g_{k+1} / p_k, the deterministic part of the weight.
    factor: f64,
    weight: f64,
}

/// One filter step: multinomial selection, proposal mutation, then the Wald
/// loop adding fresh estimator draws to *all* N weights until every weight is
/// strictly positive.
pub(crate) fn propagate_parts<M: StateSpaceModel + ?Sized>(
    model: &M,
    cloud: &ParticleCloud,
    y_next: &[f64],
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<(Propagated, WaldStats), SmootherError> {
    let n = cfg.n_particles;
    assert_eq!(
        n,
        cloud.n_particles(),
        "config particle count differs from the cloud"
    );
    let k = cloud.step();
    let step = k + 1;

    let probs = normalize_weights(cloud.weights())?;
    let dist = WeightedIndex::new(&probs).map_err(|_| CoreError::AllZeroWeights)?;
    let mut anc_rng = factory.stream(&[TAG_ANCESTOR, step as u64]);
    let ancestors: Vec<usize> = (0..n).map(|_| dist.sample(&mut anc_rng)).collect();

    // Mutation; each particle owns the (step, i) stream for its proposal and
    // all of its estimator draws.
    let mut slots: Vec<ParticleSlot> = ancestors
        .par_iter()
        .enumerate()
        .map(|(i, &anc)| -> Result<ParticleSlot, SmootherError> {
            let mut rng = factory.stream(&[TAG_PROPAGATE, step as u64, i as u64]);
            let source = cloud.particle(anc);
            let particle = model.sample_proposal(k, source, y_next, &mut rng);
            let p = model.proposal_density(k, source, &particle, y_next);
            let g = model.obs_density(step, &particle, y_next);
            let factor = g / p;
            check_weight(i, factor)?;
            Ok(ParticleSlot {
                rng,
                ancestor: anc,
                particle,
                factor,
                weight: 0.0,
            })
        })
        .collect::<Result<_, _>>()?;

    // Wald loop: re-augment every weight each round while any is nonpositive.
    let mut rounds = 0usize;
    while slots.iter().any(|s| s.weight <= 0.0) {
        rounds += 1;
        if rounds > cfg.wald_max_rounds {
            return Err(SmootherError::WaldBudgetExceeded {
                step,
                max_rounds: cfg.wald_max_rounds,
            });
        }
        slots
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(i, slot)| -> Result<(), SmootherError> {
                let source = cloud.particle(slot.ancestor);
                let draw = model.transition_estimate(k, source, &slot.particle, &mut slot.rng)?;
                slot.weight += draw.value * slot.factor;
                check_weight(i, slot.weight)
            })?;
    }

    let d = model.state_dim();
    let mut particles = vec![0.0; n * d];
    let mut weights = vec![0.0; n];
    for (i, slot) in slots.iter().enumerate() {
        particles[i * d..(i + 1) * d].copy_from_slice(&slot.particle);
        weights[i] = slot.weight;
    }
    Ok((
        Propagated {
            step,
            particles,
            weights,
            ancestors,
        },
        WaldStats {
            rounds,
            estimator_calls: (rounds * n) as u64,
        },
    ))
}

/// One filter step returning a cloud whose backward statistics are zeroed;
/// statistic updates are applied by the smoothing engine.
pub fn propagate_wald<M: StateSpaceModel + ?Sized>(
    model: &M,
    cloud: &ParticleCloud,
    y_next: &[f64],
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<(ParticleCloud, WaldStats), SmootherError> {
    let (parts, stats) = propagate_parts(model, cloud, y_next, cfg, factory)?;
    let n = parts.weights.len();
    let sd = cloud.stat_dim();
    Ok((
        ParticleCloud::from_parts(
            parts.step,
            cloud.dim(),
            sd,
            parts.particles,
            parts.weights,
            vec![0.0; n * sd],
            parts.ancestors,
        ),
        stats,
    ))
}

/// Backward draws for one target particle: indices sampled proportionally to
/// the previous weights, estimator weights positivized by the same Wald loop
/// as the filter (all re-augmented each round).
pub(crate) fn backward_weights_with<M: StateSpaceModel + ?Sized>(
    model: &M,
    cloud: &ParticleCloud,
    target: &[f64],
    cfg: &SmootherConfig,
    dist: &WeightedIndex<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<crate::update::BackwardDraw>, usize), SmootherError> {
    let k = cloud.step();
    let kt = cfg.n_backward;
    let indices: Vec<usize> = (0..kt).map(|_| dist.sample(rng)).collect();
    let mut weights = vec![0.0f64; kt];

    let mut rounds = 0usize;
    while weights.iter().any(|&w| w <= 0.0) {
        rounds += 1;
        if rounds > cfg.wald_max_rounds {
            return Err(SmootherError::WaldBudgetExceeded {
                step: k,
                max_rounds: cfg.wald_max_rounds,
            });
        }
        for (j, w) in weights.iter_mut().enumerate() {
            let source = cloud.particle(indices[j]);
            let draw = model.transition_estimate(k, source, target, rng)?;
            *w += draw.value;
            check_weight(j, *w)?;
        }
    }

    let draws = indices
        .into_iter()
        .zip(weights)
        .map(|(index, weight)| crate::update::BackwardDraw { index, weight })
        .collect();
    Ok((draws, rounds))
}

/// Standalone variant of [`backward_weights_with`] that builds its own
/// resampling distribution from the cloud weights.
pub fn backward_weights_wald<M: StateSpaceModel + ?Sized>(
    model: &M,
    cloud: &ParticleCloud,
    target: &[f64],
    cfg: &SmootherConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<crate::update::BackwardDraw>, usize), SmootherError> {
    let probs = normalize_weights(cloud.weights())?;
    let dist = WeightedIndex::new(&probs).map_err(|_| CoreError::AllZeroWeights)?;
    backward_weights_with(model, cloud, target, cfg, &dist, rng)
}
