//! The sine diffusion `dX_t = sin(X_t - theta) dt + dW_t`, observed at evenly
//! spaced times through additive Gaussian noise.
//!
//! The drift is the gradient of `A_theta(x) = -cos(x - theta)` and
//! `psi_theta(x) = (sin^2(x - theta) + cos(x - theta)) / 2` lies in
//! `[-1/2, 1]`, so the model satisfies every requirement of the positive GPE:
//! the particle filter runs on unbiased positive density estimates, the
//! accept-reject backward sampler gets an almost-sure draw bound, and the
//! score estimator gets exact diffusion bridges.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use estimators::{
    exact_diffusion_endpoint, gpe_grad_log_transition, gpe_transition_estimate, GpeConfig,
};
use ssm_core::math::{normal_pdf, isotropic_normal_pdf};
use ssm_core::{DensityDraw, EstimateError, ModelFamily, StateSpaceModel};

use crate::error::ModelError;

#[derive(Debug, Clone)]
pub struct SineSpec {
    pub theta: f64,
    /// Observation noise variance (default 1).
    pub obs_variance: f64,
    /// Time between observations (default 1/2).
    pub delta: f64,
    /// GPE draws averaged per estimator call (default 30).
    pub estimator_replicates: usize,
    /// Prior on the initial state, N(prior_mean, prior_variance).
    pub prior_mean: f64,
    pub prior_variance: f64,
    /// Exact retrospective data simulation; falls back to fine Euler
    /// (step 1e-4) when disabled.
    pub exact_data_sim: bool,
}

impl Default for SineSpec {
    fn default() -> Self {
        SineSpec {
            theta: std::f64::consts::FRAC_PI_4,
            obs_variance: 1.0,
            delta: 0.5,
            estimator_replicates: 30,
            prior_mean: 0.0,
            prior_variance: 1.0,
            exact_data_sim: true,
        }
    }
}

/// GPE ingredients of the sine diffusion: potential `-cos(x - theta)`,
/// `psi in [-1/2, 1]`, and the theta-gradients used by score estimation.
pub fn sine_gpe_config() -> GpeConfig {
    GpeConfig {
        potential: Box::new(|th: &[f64], x: &[f64]| -(x[0] - th[0]).cos()),
        drift: Box::new(|th: &[f64], x: &[f64]| vec![(x[0] - th[0]).sin()]),
        phi: Box::new(|th: &[f64], x: &[f64]| {
            let u = x[0] - th[0];
            (u.sin().powi(2) + u.cos()) / 2.0 + 0.5
        }),
        lower_bound: Box::new(|_| -0.5),
        upper_bound: Box::new(|_| 1.0),
        grad_potential: Some(Box::new(|th: &[f64], x: &[f64]| vec![-(x[0] - th[0]).sin()])),
        grad_phi: Some(Box::new(|th: &[f64], x: &[f64]| {
            let u = x[0] - th[0];
            vec![u.sin() * (1.0 - 2.0 * u.cos()) / 2.0]
        })),
        grad_lower_bound: Some(Box::new(|_| vec![0.0])),
        max_rejections: 1_000_000,
    }
}

pub struct SineModel {
    spec: SineSpec,
    gpe: GpeConfig,
    theta: [f64; 1],
    /// Time-0 conditioning: the initial proposal is the conjugate posterior
    /// given this observation, and the initial weight carries chi*g0/rho0.
    first_obs: Option<f64>,
    init_mean: f64,
    init_var: f64,
}

/// Build the sine model. Pass the first observation to condition the initial
/// proposal on it (state-estimation experiments); pass `None` for recursive
/// MLE, where every observation is consumed by a filter step.
pub fn sine_model(spec: &SineSpec, first_obs: Option<f64>) -> SineModel {
    let (init_mean, init_var) = match first_obs {
        Some(y0) => {
            let v = 1.0 / (1.0 / spec.prior_variance + 1.0 / spec.obs_variance);
            (v * (spec.prior_mean / spec.prior_variance + y0 / spec.obs_variance), v)
        }
        None => (spec.prior_mean, spec.prior_variance),
    };
    SineModel {
        spec: spec.clone(),
        gpe: sine_gpe_config(),
        theta: [spec.theta],
        first_obs,
        init_mean,
        init_var,
    }
}

impl SineModel {
    /// Conjugate combination of the Euler transition kernel with the Gaussian
    /// likelihood of the next observation: the near-optimal filter proposal.
    fn proposal_moments(&self, x: f64, y_next: f64) -> (f64, f64) {
        let d = self.spec.delta;
        let s2 = self.spec.obs_variance;
        let euler_mean = x + d * (x - self.spec.theta).sin();
        let v = d * s2 / (d + s2);
        (v * (euler_mean / d + y_next / s2), v)
    }
}

impl StateSpaceModel for SineModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let z: f64 = StandardNormal.sample(rng);
        vec![self.init_mean + self.init_var.sqrt() * z]
    }

    fn initial_density_ratio(&self, x: &[f64]) -> f64 {
        match self.first_obs {
            None => 1.0,
            Some(y0) => {
                let chi = normal_pdf(x[0], self.spec.prior_mean, self.spec.prior_variance);
                let g0 = normal_pdf(y0, x[0], self.spec.obs_variance);
                let rho = normal_pdf(x[0], self.init_mean, self.init_var);
                chi * g0 / rho
            }
        }
    }

    fn sample_proposal(
        &self,
        _k: usize,
        x: &[f64],
        y_next: &[f64],
        rng: &mut dyn RngCore,
    ) -> Vec<f64> {
        let (m, v) = self.proposal_moments(x[0], y_next[0]);
        let z: f64 = StandardNormal.sample(rng);
        vec![m + v.sqrt() * z]
    }

    fn proposal_density(&self, _k: usize, x: &[f64], x_next: &[f64], y_next: &[f64]) -> f64 {
        let (m, v) = self.proposal_moments(x[0], y_next[0]);
        normal_pdf(x_next[0], m, v)
    }

    fn obs_density(&self, _k: usize, x: &[f64], y: &[f64]) -> f64 {
        normal_pdf(y[0], x[0], self.spec.obs_variance)
    }

    fn transition_estimate(
        &self,
        _k: usize,
        x: &[f64],
        x_next: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<DensityDraw, EstimateError> {
        let reps = self.spec.estimator_replicates.max(1);
        let mut acc = 0.0;
        let mut events = 0u32;
        for _ in 0..reps {
            let (v, kappa) =
                gpe_transition_estimate(&self.gpe, &self.theta, x, x_next, self.spec.delta, rng);
            acc += v;
            events += kappa;
        }
        Ok(DensityDraw::new(acc / reps as f64, events))
    }

    fn transition_estimate_is_positive(&self) -> bool {
        true
    }

    fn transition_estimate_sup(&self, _k: usize, x: &[f64], x_next: &[f64]) -> Option<f64> {
        // Every thinning factor is in [0, 1], so each draw (hence the
        // replicate average) is at most the Gaussian kernel times the
        // potential tilt.
        let d = self.spec.delta;
        let a_y = -(x_next[0] - self.spec.theta).cos();
        let a_x = -(x[0] - self.spec.theta).cos();
        Some(isotropic_normal_pdf(x, x_next, d) * (a_y - a_x + 0.5 * d).exp())
    }

    fn grad_log_transition_estimate(
        &self,
        _k: usize,
        x: &[f64],
        x_next: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<f64>>, EstimateError> {
        let g = gpe_grad_log_transition(&self.gpe, &self.theta, x, x_next, self.spec.delta, rng)
            .map_err(EstimateError::from)?;
        Ok(Some(g))
    }
}

/// Parametric family over theta for recursive maximum likelihood.
#[derive(Debug, Clone)]
pub struct SineFamily {
    pub template: SineSpec,
}

impl ModelFamily for SineFamily {
    type Model = SineModel;

    fn param_dim(&self) -> usize {
        1
    }

    fn model_at(&self, theta: &[f64]) -> SineModel {
        let mut spec = self.template.clone();
        spec.theta = theta[0];
        sine_model(&spec, None)
    }
}

/// Simulate `n + 1` states and observations at spacing `spec.delta`.
///
/// Transitions use exact retrospective sampling by default; with
/// `exact_data_sim` disabled, a fine Euler scheme (step 1e-4) is used
/// instead. Both are acceptance-equivalent at Monte Carlo resolution.
pub fn simulate_sine(
    spec: &SineSpec,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let gpe = sine_gpe_config();
    let theta = [spec.theta];
    let obs_sd = spec.obs_variance.sqrt();
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);

    let z0: f64 = StandardNormal.sample(rng);
    let mut x = spec.prior_mean + spec.prior_variance.sqrt() * z0;
    for _ in 0..=n {
        let eps: f64 = StandardNormal.sample(rng);
        xs.push(x);
        ys.push(x + obs_sd * eps);
        x = if spec.exact_data_sim {
            // sup_y A(y) = 1 for A = -cos.
            exact_diffusion_endpoint(&gpe, &theta, &[x], spec.delta, 1.0, rng)
                .map_err(|e| ModelError::Domain(e.to_string()))?[0]
        } else {
            let mut z = x;
            let step = 1e-4;
            let n_sub = (spec.delta / step).round() as usize;
            let sqrt_step = step.sqrt();
            for _ in 0..n_sub {
                let w: f64 = StandardNormal.sample(rng);
                z += step * (z - spec.theta).sin() + sqrt_step * w;
            }
            z
        };
    }
    Ok((xs, ys))
}
