//! Stochastic recurrent network state space model.
//!
//! `X_0 ~ N(0, Sigma)` and, for `k >= 1`,
//!
//! ```text
//! X_k = tanh(W1 Y_{k-1} + W2 X_{k-1} + b + eta_k),    eta_k ~ N(0, Q)
//! Y_k = W3 X_k + c + eps_k,                            eps_k ~ N(0, R)
//! ```
//!
//! with diagonal covariances. The transition of `X_k` depends on the previous
//! *observation*, so the model captures the observation record at
//! construction and indexes it by the source step. Because `tanh` is a
//! diffeomorphism onto `(-1, 1)`, the transition density is available in
//! closed form coordinate-wise:
//! `p(x') = prod_i N(atanh(x'_i); mu_i, q) / (1 - x'_i^2)`,
//! and the model exposes it as a deterministic positive "estimator".
//!
//! Weights for the experiments are synthesized from a seeded Gaussian
//! initialization scaled by `1/sqrt(fan_in)`; no external training pipeline
//! is involved.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use ssm_core::math::normal_logpdf;
use ssm_core::{DensityDraw, EstimateError, RngFactory, StateSpaceModel};

#[derive(Debug, Clone)]
pub struct RnnSsmSpec {
    pub state_dim: usize,
    pub obs_dim: usize,
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub w3: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    /// Diagonal variances (0.1 on every coordinate by default).
    pub sigma_var: f64,
    pub q_var: f64,
    pub r_var: f64,
}

/// Largest double strictly below 1; tanh outputs are clamped into
/// `[-TANH_MAX, TANH_MAX]` so the change-of-variables density stays finite.
const TANH_MAX: f64 = 0.999_999_999_999_999_9;

fn tanh_clamped(z: f64) -> f64 {
    z.tanh().clamp(-TANH_MAX, TANH_MAX)
}

/// Gaussian weights scaled by `1 / sqrt(fan_in)`, seeded.
pub fn synthesize_rnn_spec(state_dim: usize, obs_dim: usize, seed: u64) -> RnnSsmSpec {
    let factory = RngFactory::new(seed);
    let mut rng = factory.stream(&[0xbeef]);
    let mut gauss_matrix = |rows: usize, cols: usize| {
        let scale = 1.0 / (cols as f64).sqrt();
        DMatrix::from_fn(rows, cols, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
    };
    let w1 = gauss_matrix(state_dim, obs_dim);
    let w2 = gauss_matrix(state_dim, state_dim);
    let w3 = gauss_matrix(obs_dim, state_dim);
    let b = gauss_matrix(state_dim, 1).column(0).into();
    let c = gauss_matrix(obs_dim, 1).column(0).into();
    RnnSsmSpec {
        state_dim,
        obs_dim,
        w1,
        w2,
        w3,
        b,
        c,
        sigma_var: 0.1,
        q_var: 0.1,
        r_var: 0.1,
    }
}

/// Simulate `n + 1` states and observations (times `0..=n`).
pub fn simulate_rnn_ssm(
    spec: &RnnSsmSpec,
    n: usize,
    rng: &mut dyn RngCore,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = spec.state_dim;
    let m = spec.obs_dim;
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);

    let mut x = DVector::from_fn(d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        spec.sigma_var.sqrt() * z
    });
    for k in 0..=n {
        let y = DVector::from_fn(m, |i, _| {
            let z: f64 = StandardNormal.sample(rng);
            (&spec.w3 * &x)[i] + spec.c[i] + spec.r_var.sqrt() * z
        });
        xs.push(x.iter().copied().collect());
        ys.push(y.iter().copied().collect());
        if k < n {
            let pre = &spec.w1 * &y + &spec.w2 * &x + &spec.b;
            x = DVector::from_fn(d, |i, _| {
                let z: f64 = StandardNormal.sample(rng);
                tanh_clamped(pre[i] + spec.q_var.sqrt() * z)
            });
        }
    }
    (xs, ys)
}

pub struct RnnModel {
    spec: RnnSsmSpec,
    /// Observation record; the transition into step k+1 reads entry k.
    observations: Vec<Vec<f64>>,
}

/// Build the filter view of the RNN model over a fixed observation record.
/// The initial proposal is the prior `N(0, Sigma)`; the time-0 observation is
/// folded into the initial weights.
pub fn rnn_model(spec: &RnnSsmSpec, observations: &[Vec<f64>]) -> RnnModel {
    assert!(!observations.is_empty());
    RnnModel {
        spec: spec.clone(),
        observations: observations.to_vec(),
    }
}

impl RnnModel {
    fn pre_activation(&self, k: usize, x: &[f64]) -> DVector<f64> {
        let y_prev = DVector::from_row_slice(&self.observations[k]);
        let xv = DVector::from_row_slice(x);
        &self.spec.w1 * y_prev + &self.spec.w2 * xv + &self.spec.b
    }

    /// Closed-form transition log-density through the tanh change of
    /// variables; `-inf` outside the open cube.
    fn transition_logpdf(&self, k: usize, x: &[f64], x_next: &[f64]) -> f64 {
        let mu = self.pre_activation(k, x);
        let mut log_p = 0.0;
        for (i, &v) in x_next.iter().enumerate() {
            if v.abs() >= 1.0 {
                return f64::NEG_INFINITY;
            }
            let z = v.atanh();
            log_p += normal_logpdf(z, mu[i], self.spec.q_var) - (1.0 - v * v).ln();
        }
        log_p
    }

    fn obs_mean(&self, x: &[f64]) -> DVector<f64> {
        &self.spec.w3 * DVector::from_row_slice(x) + &self.spec.c
    }
}

impl StateSpaceModel for RnnModel {
    fn state_dim(&self) -> usize {
        self.spec.state_dim
    }

    fn obs_dim(&self) -> usize {
        self.spec.obs_dim
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let sd = self.spec.sigma_var.sqrt();
        (0..self.spec.state_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            })
            .collect()
    }

    fn initial_density_ratio(&self, x: &[f64]) -> f64 {
        // rho_0 = chi, so the ratio is the time-0 likelihood.
        self.obs_density(0, x, &self.observations[0])
    }

    fn sample_proposal(
        &self,
        k: usize,
        x: &[f64],
        _y_next: &[f64],
        rng: &mut dyn RngCore,
    ) -> Vec<f64> {
        // Bootstrap: sample the transition itself.
        let mu = self.pre_activation(k, x);
        let sd = self.spec.q_var.sqrt();
        (0..self.spec.state_dim)
            .map(|i| {
                let z: f64 = StandardNormal.sample(rng);
                tanh_clamped(mu[i] + sd * z)
            })
            .collect()
    }

    fn proposal_density(&self, k: usize, x: &[f64], x_next: &[f64], _y_next: &[f64]) -> f64 {
        self.transition_logpdf(k, x, x_next).exp()
    }

    fn obs_density(&self, _k: usize, x: &[f64], y: &[f64]) -> f64 {
        let mu = self.obs_mean(x);
        let mut log_g = 0.0;
        for (i, &v) in y.iter().enumerate() {
            log_g += normal_logpdf(v, mu[i], self.spec.r_var);
        }
        log_g.exp()
    }

    fn transition_estimate(
        &self,
        k: usize,
        x: &[f64],
        x_next: &[f64],
        _rng: &mut dyn RngCore,
    ) -> Result<DensityDraw, EstimateError> {
        Ok(DensityDraw::exact(self.transition_logpdf(k, x, x_next).exp()))
    }

    fn transition_estimate_is_positive(&self) -> bool {
        true
    }

    fn transition_estimate_sup(&self, k: usize, x: &[f64], x_next: &[f64]) -> Option<f64> {
        Some(self.transition_logpdf(k, x, x_next).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> RnnSsmSpec {
        synthesize_rnn_spec(1, 1, 99)
    }

    #[test]
    fn transition_density_integrates_to_one() {
        // Simpson quadrature of the 1-D tanh change-of-variables density.
        let spec = small_spec();
        let obs = vec![vec![0.3]];
        let model = rnn_model(&spec, &obs);
        let n = 200_001usize;
        let lo = -1.0 + 1e-9;
        let hi = 1.0 - 1e-9;
        let h = (hi - lo) / (n - 1) as f64;
        let mut integral = 0.0;
        for i in 0..n {
            let v = lo + i as f64 * h;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += w * model.proposal_density(0, &[0.2], &[v], &[0.0]);
        }
        integral *= h / 3.0;
        assert!((integral - 1.0).abs() < 1e-6, "integral {integral}");
    }

    #[test]
    fn near_deterministic_when_noise_vanishes() {
        let mut spec = small_spec();
        spec.q_var = 1e-12;
        let obs = vec![vec![0.3]];
        let model = rnn_model(&spec, &obs);
        let f = ssm_core::RngFactory::new(7);
        let mut rng = f.stream(&[0]);
        let x = [0.2];
        let expect = (model.pre_activation(0, &x)[0]).tanh();
        for _ in 0..32 {
            let x_next = model.sample_proposal(0, &x, &[0.0], &mut rng);
            assert!((x_next[0] - expect).abs() < 1e-5);
        }
    }

    #[test]
    fn simulated_transitions_have_positive_finite_density() {
        let spec = synthesize_rnn_spec(8, 4, 11);
        let f = ssm_core::RngFactory::new(8);
        let mut rng = f.stream(&[0]);
        let (xs, ys) = simulate_rnn_ssm(&spec, 60, &mut rng);
        let model = rnn_model(&spec, &ys);
        for k in 0..60 {
            let p = model
                .transition_estimate(k, &xs[k], &xs[k + 1], &mut rng)
                .unwrap()
                .value;
            assert!(p.is_finite() && p > 0.0, "density {p} at step {k}");
        }
    }

    #[test]
    fn simulation_shapes_and_determinism() {
        let spec = synthesize_rnn_spec(4, 2, 3);
        let f = ssm_core::RngFactory::new(10);
        let (xs_a, ys_a) = simulate_rnn_ssm(&spec, 20, &mut f.stream(&[5]));
        let (xs_b, ys_b) = simulate_rnn_ssm(&spec, 20, &mut f.stream(&[5]));
        assert_eq!(xs_a, xs_b);
        assert_eq!(ys_a, ys_b);
        assert_eq!(xs_a.len(), 21);
        assert_eq!(xs_a[0].len(), 4);
        assert_eq!(ys_a[0].len(), 2);
    }
}
