//! The online smoothing loop.

use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rayon::prelude::*;

use ssm_core::{
    normalize_weights, AdditiveFunctional, CoreError, ParticleCloud, RngFactory, StateSpaceModel,
};

use crate::config::{SmootherConfig, SmoothingMethod};
use crate::error::SmootherError;
use crate::increments::BackwardIncrement;
use crate::update::{update_ar_with, update_is_with};
use crate::wald::{backward_weights_with, init_filter, propagate_parts, Propagated, WaldStats, TAG_BACKWARD};

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepTrace {
    pub step: usize,
    pub ess: f64,
    pub wald_rounds_filter: usize,
    pub mean_wald_rounds_backward: f64,
    pub wall_time_ns: u64,
}

impl StepTrace {
    pub fn csv_header() -> &'static str {
        "step,ess,wald_rounds_filter,mean_wald_rounds_backward,wall_time_ns"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.step,
            self.ess,
            self.wald_rounds_filter,
            self.mean_wald_rounds_backward,
            self.wall_time_ns
        )
    }
}

/// Result of one smoothing run.
#[derive(Debug, Clone)]
pub struct SmoothOutput {
    /// `sum_i (omega_n^i / Omega_n) tau_n^i`, the estimate of the smoothed
    /// additive functional.
    pub estimate: Vec<f64>,
    pub trace: Vec<StepTrace>,
    pub final_cloud: ParticleCloud,
}

fn backward_stats_step<M, I>(
    model: &M,
    prev: &ParticleCloud,
    parts: &Propagated,
    increment: &I,
    method: SmoothingMethod,
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<(Vec<f64>, f64), SmootherError>
where
    M: StateSpaceModel + ?Sized,
    I: BackwardIncrement + ?Sized,
{
    let n = prev.n_particles();
    let dim = increment.dim();
    let d = prev.dim();
    let step = parts.step as u64;

    match method {
        SmoothingMethod::PathSpace => {
            // Ancestral-line update: each particle inherits its ancestor's
            // statistic plus the increment along the surviving trajectory.
            let mut stats = vec![0.0; n * dim];
            stats
                .par_chunks_mut(dim)
                .enumerate()
                .try_for_each(|(i, out)| -> Result<(), SmootherError> {
                    let anc = parts.ancestors[i];
                    let mut rng = factory.stream(&[TAG_BACKWARD, step, i as u64]);
                    out.copy_from_slice(prev.stat(anc));
                    increment.add_increment(
                        prev.step(),
                        prev.particle(anc),
                        &parts.particles[i * d..(i + 1) * d],
                        &mut rng,
                        out,
                    )?;
                    Ok(())
                })?;
            Ok((stats, 0.0))
        }
        SmoothingMethod::BackwardIS | SmoothingMethod::BackwardAR => {
            let probs = normalize_weights(prev.weights())?;
            let dist = WeightedIndex::new(&probs).map_err(|_| CoreError::AllZeroWeights)?;
            let mut stats = vec![0.0; n * dim];
            let rounds: Vec<f64> = stats
                .par_chunks_mut(dim)
                .enumerate()
                .map(|(i, out)| -> Result<f64, SmootherError> {
                    let mut rng = factory.stream(&[TAG_BACKWARD, step, i as u64]);
                    let target = &parts.particles[i * d..(i + 1) * d];
                    let (tau, used) = match method {
                        SmoothingMethod::BackwardIS => {
                            let (draws, rounds) =
                                backward_weights_with(model, prev, target, cfg, &dist, &mut rng)?;
                            let tau = update_is_with(prev, target, &draws, increment, &mut rng)?;
                            (tau, rounds as f64)
                        }
                        SmoothingMethod::BackwardAR => {
                            let (tau, trials) = update_ar_with(
                                model, prev, target, cfg, &dist, increment, &mut rng,
                            )?;
                            (tau, trials as f64 / cfg.n_backward as f64)
                        }
                        SmoothingMethod::PathSpace => unreachable!(),
                    };
                    out.copy_from_slice(&tau);
                    Ok(used)
                })
                .collect::<Result<_, _>>()?;
            let mean_rounds = rounds.iter().sum::<f64>() / n as f64;
            Ok((stats, mean_rounds))
        }
    }
}

/// One complete smoothing step with a caller-supplied increment source:
/// Wald propagation followed by the configured backward-statistic update.
///
/// This is the building block recursive maximum likelihood drives with its
/// estimated score increments; `smooth_online` is this in a loop.
pub fn step_with_increment<M, I>(
    model: &M,
    cloud: &ParticleCloud,
    y_next: &[f64],
    increment: &I,
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<(ParticleCloud, WaldStats, f64), SmootherError>
where
    M: StateSpaceModel + ?Sized,
    I: BackwardIncrement + ?Sized,
{
    let (parts, wstats) = propagate_parts(model, cloud, y_next, cfg, factory)?;
    let (stats, mean_backward) =
        backward_stats_step(model, cloud, &parts, increment, cfg.method, cfg, factory)?;
    let next = ParticleCloud::from_parts(
        parts.step,
        cloud.dim(),
        increment.dim(),
        parts.particles,
        parts.weights,
        stats,
        parts.ancestors,
    );
    Ok((next, wstats, mean_backward))
}

fn run_smoother<M, I>(
    model: &M,
    increment: &I,
    observations: &[Vec<f64>],
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<SmoothOutput, SmootherError>
where
    M: StateSpaceModel + ?Sized,
    I: BackwardIncrement + ?Sized,
{
    if observations.is_empty() {
        return Err(SmootherError::NoObservations);
    }
    let mut cloud = init_filter(model, increment.dim(), cfg, factory)?;
    let mut trace = Vec::with_capacity(observations.len() - 1);
    for y in &observations[1..] {
        let t0 = Instant::now();
        let (next, wstats, mean_backward) =
            step_with_increment(model, &cloud, y, increment, cfg, factory)?;
        trace.push(StepTrace {
            step: next.step(),
            ess: next.ess()?,
            wald_rounds_filter: wstats.rounds,
            mean_wald_rounds_backward: mean_backward,
            wall_time_ns: t0.elapsed().as_nanos() as u64,
        });
        cloud = next;
    }
    let estimate = cloud.weighted_stat_mean()?;
    Ok(SmoothOutput {
        estimate,
        trace,
        final_cloud: cloud,
    })
}

/// Run the online smoother over an observation record `y_0, ..., y_n`.
///
/// `y_0` is not consumed by a propagation step; models that condition on it
/// do so through their initial proposal. The estimate is the self-normalized
/// mean of the final backward statistics.
pub fn smooth_online<M, F>(
    model: &M,
    functional: &F,
    observations: &[Vec<f64>],
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<SmoothOutput, SmootherError>
where
    M: StateSpaceModel + ?Sized,
    F: AdditiveFunctional,
{
    run_smoother(model, functional, observations, cfg, factory)
}

/// The ancestral-line baseline: identical filter, statistics carried along
/// surviving trajectories only. Degenerates for early time indices on long
/// records, which is exactly what the backward-sampling methods avoid.
pub fn path_space_smoother<M, F>(
    model: &M,
    functional: &F,
    observations: &[Vec<f64>],
    cfg: &SmootherConfig,
    factory: &RngFactory,
) -> Result<SmoothOutput, SmootherError>
where
    M: StateSpaceModel + ?Sized,
    F: AdditiveFunctional,
{
    let cfg = SmootherConfig {
        method: SmoothingMethod::PathSpace,
        ..cfg.clone()
    };
    run_smoother(model, functional, observations, &cfg, factory)
}
