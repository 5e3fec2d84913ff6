//! General Poisson Estimator for unit diffusions with gradient-form drift.
//!
//! Setup: `dX_t = alpha_theta(X_t) dt + dW_t` with `alpha_theta = grad_x
//! A_theta`, and `psi_theta(x) = (|alpha_theta(x)|^2 + laplacian A_theta(x))/2`
//! globally pinched between bounds `m_lo <= psi <= m_hi`. Girsanov gives the
//! transition density over a step of length `dt` as
//!
//! ```text
//! q(x, y) = N(x - y; 0, dt*I) * exp(A(y) - A(x)) * E_bridge[ exp(-int_0^dt psi(w_s) ds) ]
//! ```
//!
//! Drawing `kappa ~ Poisson((m_hi - m_lo) dt)` marks at uniform times and a
//! Brownian bridge through them turns the path integral into the finite
//! product `prod_j (m_hi - psi(w_{U_j})) / (m_hi - m_lo)`, every factor of
//! which lies in `[0, 1]`. The estimator is therefore unbiased *and*
//! nonnegative draw by draw, which is what lets the accept-reject backward
//! sampler and the recursive-MLE plug-in work without positivization.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson, StandardNormal};

use ssm_core::math::isotropic_normal_pdf;

use crate::bridge::{bridge_value_at, sample_brownian_bridge_at, BridgeSkeleton};
use crate::error::EstimatorError;

/// Map `(theta, x) -> f64`.
pub type ScalarField = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
/// Map `(theta, x) -> R^q` (or `R^d` for the drift).
pub type VectorField = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Map `theta -> f64`.
pub type ThetaScalar = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Map `theta -> R^q`.
pub type ThetaVector = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Model ingredients for the General Poisson Estimator.
///
/// `phi(theta, x) = psi_theta(x) - m_lo(theta)` must be nonnegative and at
/// most `m_hi - m_lo` everywhere the bridge can wander; the bounds are the
/// user's responsibility (see [`GpeConfig::bounds_hold_on`] for spot checks).
/// Gradient fields are only needed for score estimation.
pub struct GpeConfig {
    /// Potential `A_theta`; the drift is its spatial gradient.
    pub potential: ScalarField,
    /// Drift `alpha_theta = grad_x A_theta` (used by simulators, not by the
    /// estimator itself).
    pub drift: VectorField,
    /// `phi_theta = psi_theta - m_lo(theta)`, in `[0, m_hi - m_lo]`.
    pub phi: ScalarField,
    /// Global lower bound `m_lo(theta)` on `psi_theta`.
    pub lower_bound: ThetaScalar,
    /// Global upper bound `m_hi(theta)` on `psi_theta`.
    pub upper_bound: ThetaScalar,
    /// `grad_theta A_theta`, q-dimensional.
    pub grad_potential: Option<VectorField>,
    /// `grad_theta phi_theta`, q-dimensional.
    pub grad_phi: Option<VectorField>,
    /// `grad_theta m_lo(theta)`, q-dimensional.
    pub grad_lower_bound: Option<ThetaVector>,
    /// Proposal cap for the exact bridge / endpoint rejection samplers.
    pub max_rejections: u64,
}

impl GpeConfig {
    /// Spot-check `0 <= phi <= m_hi - m_lo` on a set of states.
    pub fn bounds_hold_on(&self, theta: &[f64], states: &[Vec<f64>]) -> bool {
        let width = (self.upper_bound)(theta) - (self.lower_bound)(theta);
        if width <= 0.0 {
            return false;
        }
        states.iter().all(|x| {
            let p = (self.phi)(theta, x);
            (0.0..=width).contains(&p)
        })
    }
}

fn sample_poisson(rate: f64, rng: &mut dyn RngCore) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    let draw = Poisson::new(rate).expect("positive Poisson rate").sample(rng);
    draw as u64
}

/// Uniform marks on (0, dt), sorted; boundary hits (measure zero) dropped so
/// the bridge sampler's strict-ordering precondition always holds.
fn sorted_uniform_times(count: u64, dt: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut times: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..dt)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    times.retain(|&t| t > 0.0 && t < dt);
    times
}

/// One draw of the positive unbiased GPE of the transition density over a
/// step of length `dt`. Returns the value and the number of Poisson marks.
pub fn gpe_transition_estimate(
    cfg: &GpeConfig,
    theta: &[f64],
    x: &[f64],
    y: &[f64],
    dt: f64,
    rng: &mut dyn RngCore,
) -> (f64, u32) {
    let m_lo = (cfg.lower_bound)(theta);
    let m_hi = (cfg.upper_bound)(theta);
    let width = m_hi - m_lo;
    let kappa = sample_poisson(width * dt, rng);
    let times = sorted_uniform_times(kappa, dt, rng);
    let skel = sample_brownian_bridge_at(x, y, dt, &times, rng)
        .expect("sorted interior times are valid");

    let mut product = 1.0;
    for j in 0..skel.n_interior() {
        product *= 1.0 - (cfg.phi)(theta, skel.value(j)) / width;
    }

    let gauss = isotropic_normal_pdf(x, y, dt);
    let tilt = ((cfg.potential)(theta, y) - (cfg.potential)(theta, x) - m_lo * dt).exp();
    (gauss * tilt * product, kappa as u32)
}

/// One thinning round: propose a bridge with Poisson marks and accept with
/// conditional probability `exp(-int_0^dt phi(w_s) ds)`.
fn propose_thinned_bridge(
    cfg: &GpeConfig,
    theta: &[f64],
    x: &[f64],
    y: &[f64],
    dt: f64,
    rng: &mut dyn RngCore,
) -> Option<BridgeSkeleton> {
    let width = (cfg.upper_bound)(theta) - (cfg.lower_bound)(theta);
    let kappa = sample_poisson(width * dt, rng);
    let times = sorted_uniform_times(kappa, dt, rng);
    let skel = sample_brownian_bridge_at(x, y, dt, &times, rng)
        .expect("sorted interior times are valid");
    for j in 0..skel.n_interior() {
        let u: f64 = rng.random_range(0.0..width);
        if u <= (cfg.phi)(theta, skel.value(j)) {
            return None;
        }
    }
    Some(skel)
}

/// Exact draw from the diffusion bridge conditioned on both endpoints, by
/// rejection on Brownian bridges with Poisson thinning.
///
/// The returned skeleton carries the accepted mark times; the law of the path
/// between adjacent skeleton points, given the skeleton, is again Brownian
/// bridge, so [`bridge_value_at`] extends the draw to any other time.
pub fn sample_diffusion_bridge(
    cfg: &GpeConfig,
    theta: &[f64],
    x: &[f64],
    y: &[f64],
    dt: f64,
    rng: &mut dyn RngCore,
) -> Result<BridgeSkeleton, EstimatorError> {
    for _ in 0..cfg.max_rejections {
        if let Some(skel) = propose_thinned_bridge(cfg, theta, x, y, dt, rng) {
            return Ok(skel);
        }
    }
    Err(EstimatorError::RejectionBudgetExceeded {
        budget: cfg.max_rejections,
    })
}

/// Unbiased estimate of `grad_theta log q_theta(x, y)` over a step of length
/// `dt`:
///
/// ```text
/// (grad A(y) - grad A(x) - grad m_lo * dt) - dt * grad_phi(s_U)
/// ```
///
/// where `s` is an exact diffusion-bridge draw and `U` uniform on `(0, 1)`.
///
/// Panics if the gradient fields are missing from the config.
pub fn gpe_grad_log_transition(
    cfg: &GpeConfig,
    theta: &[f64],
    x: &[f64],
    y: &[f64],
    dt: f64,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>, EstimatorError> {
    let grad_potential = cfg
        .grad_potential
        .as_ref()
        .expect("grad_potential required for score estimation");
    let grad_phi = cfg
        .grad_phi
        .as_ref()
        .expect("grad_phi required for score estimation");

    let skel = sample_diffusion_bridge(cfg, theta, x, y, dt, rng)?;
    let u: f64 = rng.random_range(0.0..1.0);
    let s_u = bridge_value_at(&skel, u * dt, rng);

    let ga_y = grad_potential(theta, y);
    let ga_x = grad_potential(theta, x);
    let gp = grad_phi(theta, &s_u);
    let gm: Vec<f64> = match &cfg.grad_lower_bound {
        Some(g) => g(theta),
        None => vec![0.0; ga_y.len()],
    };

    Ok(ga_y
        .iter()
        .zip(&ga_x)
        .zip(&gm)
        .zip(&gp)
        .map(|(((ay, ax), m), p)| ay - ax - m * dt - dt * p)
        .collect())
}

/// Exact draw of `X_dt` given `X_0 = x` for the unit diffusion, by
/// retrospective rejection: the endpoint is proposed from the tilted Gaussian
/// `propto N(y; x, dt) exp(A(y))` and kept iff a Brownian bridge to it
/// survives Poisson thinning.
///
/// `potential_sup` must dominate `A_theta` everywhere.
pub fn exact_diffusion_endpoint(
    cfg: &GpeConfig,
    theta: &[f64],
    x: &[f64],
    dt: f64,
    potential_sup: f64,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>, EstimatorError> {
    let d = x.len();
    let sd = dt.sqrt();
    for _ in 0..cfg.max_rejections {
        let y: Vec<f64> = (0..d)
            .map(|c| {
                let z: f64 = StandardNormal.sample(rng);
                x[c] + sd * z
            })
            .collect();
        let log_accept = (cfg.potential)(theta, &y) - potential_sup;
        if rng.random_range(0.0f64..1.0).ln() >= log_accept {
            continue;
        }
        if propose_thinned_bridge(cfg, theta, x, &y, dt, rng).is_some() {
            return Ok(y);
        }
    }
    Err(EstimatorError::RejectionBudgetExceeded {
        budget: cfg.max_rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ssm_core::math::normal_pdf;
    use ssm_core::rng::RngFactory;

    /// `dX = sin(X - theta) dt + dW`: drift potential `-cos(x - theta)`,
    /// `psi = (sin^2 + cos)/2 in [-1/2, 1]`.
    fn sine_config() -> GpeConfig {
        GpeConfig {
            potential: Box::new(|th: &[f64], x: &[f64]| -(x[0] - th[0]).cos()),
            drift: Box::new(|th: &[f64], x: &[f64]| vec![(x[0] - th[0]).sin()]),
            phi: Box::new(|th: &[f64], x: &[f64]| {
                let u = x[0] - th[0];
                (u.sin().powi(2) + u.cos()) / 2.0 + 0.5
            }),
            lower_bound: Box::new(|_| -0.5),
            upper_bound: Box::new(|_| 1.0),
            grad_potential: Some(Box::new(|th: &[f64], x: &[f64]| {
                vec![-(x[0] - th[0]).sin()]
            })),
            grad_phi: Some(Box::new(|th: &[f64], x: &[f64]| {
                let u = x[0] - th[0];
                vec![u.sin() * (1.0 - 2.0 * u.cos()) / 2.0]
            })),
            grad_lower_bound: Some(Box::new(|_| vec![0.0])),
            max_rejections: 1_000_000,
        }
    }

    fn flat_config(m_lo: f64, eps: f64) -> GpeConfig {
        GpeConfig {
            potential: Box::new(|_, _| 0.0),
            drift: Box::new(|_, x: &[f64]| vec![0.0; x.len()]),
            phi: Box::new(|_, _| 0.0),
            lower_bound: Box::new(move |_| m_lo),
            upper_bound: Box::new(move |_| m_lo + eps),
            grad_potential: Some(Box::new(|_, _| vec![0.0])),
            grad_phi: Some(Box::new(|_, _| vec![0.0])),
            grad_lower_bound: Some(Box::new(|_| vec![0.0])),
            max_rejections: 1_000_000,
        }
    }

    #[test]
    fn constant_psi_reduces_to_tilted_gaussian() {
        // phi == 0 makes every product factor one, so the estimate is exactly
        // N(x - y; 0, dt) * exp(-m_lo * dt) regardless of kappa.
        let cfg = flat_config(0.4, 1e-3);
        let f = RngFactory::new(2);
        let mut rng = f.stream(&[0]);
        for _ in 0..100 {
            let (v, _) = gpe_transition_estimate(&cfg, &[0.0], &[0.2], &[1.1], 0.5, &mut rng);
            let expect = normal_pdf(0.2, 1.1, 0.5) * (-0.4f64 * 0.5).exp();
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_estimates_are_nonnegative() {
        let cfg = sine_config();
        let f = RngFactory::new(3);
        let mut rng = f.stream(&[0]);
        let theta = [std::f64::consts::FRAC_PI_4];
        for i in 0..1_000_000u64 {
            let x = [(i % 61) as f64 * 0.1 - 3.0];
            let y = [((i / 61) % 61) as f64 * 0.1 - 3.0];
            let dt = 0.05 + (i % 7) as f64 * 0.1;
            let (v, _) = gpe_transition_estimate(&cfg, &theta, &x, &y, dt, &mut rng);
            assert!(v >= 0.0, "negative GPE draw {v} at iteration {i}");
            assert!(v.is_finite());
        }
    }

    #[test]
    fn draws_are_deterministic_given_stream() {
        let cfg = sine_config();
        let f = RngFactory::new(4);
        let a: Vec<f64> = {
            let mut rng = f.stream(&[1, 2]);
            (0..50)
                .map(|_| gpe_transition_estimate(&cfg, &[0.3], &[0.0], &[0.4], 0.5, &mut rng).0)
                .collect()
        };
        let b: Vec<f64> = {
            let mut rng = f.stream(&[1, 2]);
            (0..50)
                .map(|_| gpe_transition_estimate(&cfg, &[0.3], &[0.0], &[0.4], 0.5, &mut rng).0)
                .collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_spot_check_sine() {
        let cfg = sine_config();
        let grid: Vec<Vec<f64>> = (-60..=60).map(|i| vec![i as f64 * 0.1]).collect();
        assert!(cfg.bounds_hold_on(&[std::f64::consts::FRAC_PI_4], &grid));
    }

    #[test]
    fn zero_phi_bridge_accepts_first_proposal() {
        // With phi == 0 thinning never rejects, so the "diffusion bridge" is a
        // plain Brownian bridge; check its midpoint variance.
        let cfg = flat_config(0.0, 1.5);
        let f = RngFactory::new(5);
        let mut rng = f.stream(&[0]);
        let n = 50_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let skel = sample_diffusion_bridge(&cfg, &[0.0], &[0.0], &[0.0], 1.0, &mut rng).unwrap();
            let v = bridge_value_at(&skel, 0.5, &mut rng)[0];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * (0.25f64 / n as f64).sqrt());
        assert!((var - 0.25).abs() < 3.0 * 0.25 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn bridge_acceptance_rate_matches_plain_monte_carlo() {
        // Acceptance probability of the thinning rejection sampler equals
        // E[exp(-int phi)], estimated independently by a Riemann sum over
        // finely sampled Brownian bridges.
        let cfg = sine_config();
        let theta = [std::f64::consts::FRAC_PI_4];
        let (x, y, dt) = ([0.1], [0.6], 0.5);
        let f = RngFactory::new(6);

        let n = 10_000;
        let mut rng = f.stream(&[0]);
        let mut accepted = 0u32;
        for _ in 0..n {
            if propose_thinned_bridge(&cfg, &theta, &x, &y, dt, &mut rng).is_some() {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / n as f64;
        let se_rate = (rate * (1.0 - rate) / n as f64).sqrt();

        let grid = 128;
        let times: Vec<f64> = (1..grid).map(|j| dt * j as f64 / grid as f64).collect();
        let mut rng = f.stream(&[1]);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let skel = sample_brownian_bridge_at(&x, &y, dt, &times, &mut rng).unwrap();
            let mut integral = 0.0;
            for j in 0..skel.n_interior() {
                integral += (cfg.phi)(&theta, skel.value(j));
            }
            integral *= dt / grid as f64;
            let v = (-integral).exp();
            sum += v;
            sum_sq += v * v;
        }
        let mc = sum / n as f64;
        let se_mc = ((sum_sq / n as f64 - mc * mc) / n as f64).sqrt();

        let tol = 3.0 * (se_rate * se_rate + se_mc * se_mc).sqrt() + 0.01;
        assert!(
            (rate - mc).abs() < tol,
            "acceptance rate {rate} vs bridge MC {mc} (tol {tol})"
        );
    }

    #[test]
    fn short_horizon_bridge_close_to_brownian_midpoint() {
        let cfg = sine_config();
        let theta = [std::f64::consts::FRAC_PI_4];
        let dt = 0.01;
        let f = RngFactory::new(7);
        let mut rng = f.stream(&[0]);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let skel = sample_diffusion_bridge(&cfg, &theta, &[0.0], &[0.1], dt, &mut rng).unwrap();
            let v = bridge_value_at(&skel, dt / 2.0, &mut rng)[0];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let bb_var = dt / 4.0;
        assert!((mean - 0.05).abs() < 4.0 * (bb_var / n as f64).sqrt() + 1e-4);
        assert!((var - bb_var).abs() < 4.0 * bb_var * (2.0 / n as f64).sqrt() + 1e-5);
    }

    #[test]
    fn grad_deterministic_when_grad_phi_vanishes() {
        let mut cfg = sine_config();
        cfg.grad_phi = Some(Box::new(|_, _| vec![0.0]));
        cfg.grad_lower_bound = Some(Box::new(|_| vec![0.0]));
        let theta = [0.3];
        let f = RngFactory::new(8);
        let mut rng = f.stream(&[0]);
        let expect = -(0.7f64 - 0.3).sin() - -(0.0f64 - 0.3).sin();
        for _ in 0..20 {
            let g = gpe_grad_log_transition(&cfg, &theta, &[0.0], &[0.7], 0.5, &mut rng).unwrap();
            assert!((g[0] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn grad_deterministic_term_is_antisymmetric() {
        let mut cfg = sine_config();
        cfg.grad_phi = Some(Box::new(|_, _| vec![0.0]));
        let theta = [1.1];
        let f = RngFactory::new(9);
        let mut rng = f.stream(&[0]);
        let fwd = gpe_grad_log_transition(&cfg, &theta, &[-0.2], &[0.9], 0.5, &mut rng).unwrap();
        let bwd = gpe_grad_log_transition(&cfg, &theta, &[0.9], &[-0.2], 0.5, &mut rng).unwrap();
        assert!((fwd[0] + bwd[0]).abs() < 1e-14);
    }

    #[test]
    fn exact_endpoint_zero_drift_is_brownian() {
        // A == 0 and phi == 0: the exact sampler must return plain Gaussian
        // increments with variance dt.
        let cfg = flat_config(0.0, 1.0);
        let f = RngFactory::new(10);
        let mut rng = f.stream(&[0]);
        let n = 100_000;
        let dt = 0.5;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let y = exact_diffusion_endpoint(&cfg, &[0.0], &[0.0], dt, 0.0, &mut rng).unwrap();
            sum += y[0];
            sum_sq += y[0] * y[0];
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * (dt / n as f64).sqrt());
        assert!((var - dt).abs() < 3.0 * dt * (2.0 / n as f64).sqrt());
    }
}
