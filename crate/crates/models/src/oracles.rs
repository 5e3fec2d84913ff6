//! Brute-force reference computations for validating the fast paths.
//!
//! Everything here is deliberately independent of the estimator and smoother
//! implementations: fine-grid Euler Monte Carlo for SDE transition densities
//! (kernel-free, via a one-step Chapman-Kolmogorov decomposition), common
//! random number finite differences for their parameter gradients, and dense
//! joint-Gaussian conditioning for linear models. Test-only by design —
//! nothing in the library calls these.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use ssm_core::math::normal_pdf;
use ssm_core::RngFactory;

use crate::error::ModelError;
use crate::linear_gaussian::LinearGaussianSpec;
use crate::mvn::Mvn;

/// Monte Carlo estimate of the unit-diffusion transition density
/// `q_dt(x, y)` by fine Euler simulation to time `dt - delta` followed by the
/// one-step Gaussian kernel over the final `delta`:
///
/// ```text
/// q_dt(x, y) = E[ N(y; Z + delta * drift(Z), delta) ],   Z = X_{dt - delta}.
/// ```
///
/// Returns `(mean, standard error)` from `batches` independent batches.
pub fn fine_euler_density_1d<D>(
    drift: D,
    x: f64,
    y: f64,
    dt: f64,
    delta: f64,
    step: f64,
    n_paths: usize,
    batches: usize,
    seed: u64,
) -> (f64, f64)
where
    D: Fn(f64) -> f64 + Sync,
{
    let factory = RngFactory::new(seed);
    let per_batch = n_paths / batches;
    let n_steps = ((dt - delta) / step).round() as usize;
    let sqrt_step = step.sqrt();

    let batch_means: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = factory.stream(&[0xfe, b as u64]);
            let mut acc = 0.0;
            for _ in 0..per_batch {
                let mut z = x;
                for _ in 0..n_steps {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    z += step * drift(z) + sqrt_step * w;
                }
                acc += normal_pdf(y, z + delta * drift(z), delta);
            }
            acc / per_batch as f64
        })
        .collect();

    summarize(&batch_means)
}

/// Common-random-number finite difference of the log transition density in a
/// scalar parameter: both `theta + h` and `theta - h` paths consume the same
/// Gaussian increments, so the difference estimator has tiny variance.
///
/// Returns `(gradient, standard error)` from batch means of
/// `(ln q(theta+h) - ln q(theta-h)) / 2h`.
#[allow(clippy::too_many_arguments)]
pub fn fine_euler_logdensity_grad_1d<D>(
    drift: D,
    theta: f64,
    h: f64,
    x: f64,
    y: f64,
    dt: f64,
    delta: f64,
    step: f64,
    n_paths: usize,
    batches: usize,
    seed: u64,
) -> (f64, f64)
where
    D: Fn(f64, f64) -> f64 + Sync,
{
    let factory = RngFactory::new(seed);
    let per_batch = n_paths / batches;
    let n_steps = ((dt - delta) / step).round() as usize;
    let sqrt_step = step.sqrt();
    let (tp, tm) = (theta + h, theta - h);

    let batch_grads: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = factory.stream(&[0xfd, b as u64]);
            let mut acc_p = 0.0;
            let mut acc_m = 0.0;
            for _ in 0..per_batch {
                let mut zp = x;
                let mut zm = x;
                for _ in 0..n_steps {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    let dw = sqrt_step * w;
                    zp += step * drift(tp, zp) + dw;
                    zm += step * drift(tm, zm) + dw;
                }
                acc_p += normal_pdf(y, zp + delta * drift(tp, zp), delta);
                acc_m += normal_pdf(y, zm + delta * drift(tm, zm), delta);
            }
            ((acc_p / per_batch as f64).ln() - (acc_m / per_batch as f64).ln()) / (2.0 * h)
        })
        .collect();

    summarize(&batch_grads)
}

/// 2-D analogue of [`fine_euler_density_1d`] for diffusions
/// `dX = alpha(X) dt + sigma(X) dW` with full 2x2 diffusion.
#[allow(clippy::too_many_arguments)]
pub fn fine_euler_density_2d<A, S>(
    drift: A,
    sigma: S,
    x: [f64; 2],
    y: [f64; 2],
    dt: f64,
    delta: f64,
    step: f64,
    n_paths: usize,
    batches: usize,
    seed: u64,
) -> (f64, f64)
where
    A: Fn(&[f64; 2]) -> [f64; 2] + Sync,
    S: Fn(&[f64; 2]) -> [[f64; 2]; 2] + Sync,
{
    let factory = RngFactory::new(seed);
    let per_batch = n_paths / batches;
    let n_steps = ((dt - delta) / step).round() as usize;
    let sqrt_step = step.sqrt();

    let gaussian2 = |yv: &[f64; 2], mean: &[f64; 2], s: &[[f64; 2]; 2], u: f64| -> f64 {
        // Covariance u * s s^T for the closing kernel.
        let c00 = u * (s[0][0] * s[0][0] + s[0][1] * s[0][1]);
        let c01 = u * (s[0][0] * s[1][0] + s[0][1] * s[1][1]);
        let c11 = u * (s[1][0] * s[1][0] + s[1][1] * s[1][1]);
        let det = c00 * c11 - c01 * c01;
        if det <= 0.0 {
            return 0.0;
        }
        let d0 = yv[0] - mean[0];
        let d1 = yv[1] - mean[1];
        let quad = (c11 * d0 * d0 - 2.0 * c01 * d0 * d1 + c00 * d1 * d1) / det;
        (-0.5 * quad).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    };

    let batch_means: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = factory.stream(&[0xfc, b as u64]);
            let mut acc = 0.0;
            for _ in 0..per_batch {
                let mut z = x;
                for _ in 0..n_steps {
                    let a = drift(&z);
                    let s = sigma(&z);
                    let w0: f64 = StandardNormal.sample(&mut rng);
                    let w1: f64 = StandardNormal.sample(&mut rng);
                    z = [
                        z[0] + step * a[0] + sqrt_step * (s[0][0] * w0 + s[0][1] * w1),
                        z[1] + step * a[1] + sqrt_step * (s[1][0] * w0 + s[1][1] * w1),
                    ];
                }
                let a = drift(&z);
                let mean = [z[0] + delta * a[0], z[1] + delta * a[1]];
                acc += gaussian2(&y, &mean, &sigma(&z), delta);
            }
            acc / per_batch as f64
        })
        .collect();

    summarize(&batch_means)
}

fn summarize(batch_means: &[f64]) -> (f64, f64) {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Smoother means by dense joint-Gaussian conditioning: stack `(X_{0:T},
/// Y_obs)` into one Gaussian and condition. Exact but O((Td)^3); reference
/// for the RTS recursion.
pub fn joint_gaussian_smoother(
    spec: &LinearGaussianSpec,
    ys: &[DVector<f64>],
    observe_first_at_zero: bool,
) -> Result<Vec<DVector<f64>>, ModelError> {
    let d = spec.state_dim();
    let m = spec.obs_dim();
    let horizon = if observe_first_at_zero {
        ys.len() - 1
    } else {
        ys.len()
    };
    let nx = (horizon + 1) * d;

    // Joint state mean and covariance.
    let mut mean_x = DVector::zeros(nx);
    mean_x.rows_mut(0, d).copy_from(&spec.prior_mean);
    for t in 1..=horizon {
        let prev = mean_x.rows((t - 1) * d, d).into_owned();
        mean_x.rows_mut(t * d, d).copy_from(&(&spec.a * prev));
    }
    let mut cov_x = DMatrix::zeros(nx, nx);
    cov_x
        .view_mut((0, 0), (d, d))
        .copy_from(&spec.prior_cov);
    for t in 1..=horizon {
        // Diagonal block.
        let prev = cov_x.view(((t - 1) * d, (t - 1) * d), (d, d)).into_owned();
        let diag = &spec.a * prev * spec.a.transpose() + &spec.q;
        cov_x.view_mut((t * d, t * d), (d, d)).copy_from(&diag);
        // Cross blocks with all earlier times.
        for s in 0..t {
            let c = cov_x.view((s * d, (t - 1) * d), (d, d)).into_owned();
            let cross = c * spec.a.transpose();
            cov_x.view_mut((s * d, t * d), (d, d)).copy_from(&cross);
            cov_x
                .view_mut((t * d, s * d), (d, d))
                .copy_from(&cross.transpose());
        }
    }

    // Observed times.
    let obs_times: Vec<usize> = if observe_first_at_zero {
        (0..=horizon).collect()
    } else {
        (1..=horizon).collect()
    };
    let ny = obs_times.len() * m;
    let mut hbig = DMatrix::zeros(ny, nx);
    for (j, &t) in obs_times.iter().enumerate() {
        hbig.view_mut((j * m, t * d), (m, d)).copy_from(&spec.h);
    }
    let mut rbig = DMatrix::zeros(ny, ny);
    for j in 0..obs_times.len() {
        rbig.view_mut((j * m, j * m), (m, m)).copy_from(&spec.r);
    }
    let mut yvec = DVector::zeros(ny);
    for (j, y) in ys.iter().enumerate() {
        yvec.rows_mut(j * m, m).copy_from(y);
    }

    let cov_yy = &hbig * &cov_x * hbig.transpose() + rbig;
    let cov_xy = &cov_x * hbig.transpose();
    let solver = Mvn::new(cov_yy)?;
    let innovation = yvec - &hbig * &mean_x;
    let cond_mean = &mean_x + cov_xy * solver.solve(&innovation);

    Ok((0..=horizon)
        .map(|t| cond_mean.rows(t * d, d).into_owned())
        .collect())
}
