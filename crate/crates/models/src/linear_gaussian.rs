//! Linear-Gaussian state space model with exact Kalman/RTS oracles.
//!
//! `X_{k+1} = A X_k + N(0, Q)`, `Y_k = H X_k + N(0, R)`, `X_0 ~ N(m0, P0)`.
//! Everything is tractable here, so this family serves two purposes: it
//! provides exact filtering/smoothing references for Monte Carlo tests, and
//! a `StateSpaceModel` whose "estimator" is the exact density, under which
//! the pseudo-marginal machinery must reduce to classic SMC.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use ssm_core::{DensityDraw, EstimateError, ModelFamily, StateSpaceModel};

use crate::error::ModelError;
use crate::mvn::Mvn;

#[derive(Debug, Clone)]
pub struct LinearGaussianSpec {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
}

impl LinearGaussianSpec {
    /// Scalar model `X' = a X + N(0, q)`, `Y = h X + N(0, r)`.
    pub fn scalar(a: f64, q: f64, h: f64, r: f64, m0: f64, p0: f64) -> Self {
        LinearGaussianSpec {
            a: DMatrix::from_element(1, 1, a),
            q: DMatrix::from_element(1, 1, q),
            h: DMatrix::from_element(1, 1, h),
            r: DMatrix::from_element(1, 1, r),
            prior_mean: DVector::from_element(1, m0),
            prior_cov: DMatrix::from_element(1, 1, p0),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Exact Gaussian recursions for one observation record.
#[derive(Debug, Clone)]
pub struct KalmanRts {
    /// Filter means/covs at times `0..=T`.
    pub filter_means: Vec<DVector<f64>>,
    pub filter_covs: Vec<DMatrix<f64>>,
    /// One-step predictive means/covs at times `0..=T` (at 0: the prior).
    pub pred_means: Vec<DVector<f64>>,
    pub pred_covs: Vec<DMatrix<f64>>,
    /// RTS smoother means/covs at times `0..=T`.
    pub smoother_means: Vec<DVector<f64>>,
    pub smoother_covs: Vec<DMatrix<f64>>,
    /// `log p(y_k | y_{<k})`, one entry per observation in record order.
    pub pred_loglik: Vec<f64>,
}

/// Kalman filter + RTS smoother.
///
/// With `observe_first_at_zero`, `ys[k]` is the observation at time `k` and
/// the prior is updated at time 0; otherwise `ys[k]` is observed at time
/// `k + 1` and time 0 carries the bare prior.
pub fn kalman_rts(
    spec: &LinearGaussianSpec,
    ys: &[DVector<f64>],
    observe_first_at_zero: bool,
) -> Result<KalmanRts, ModelError> {
    let horizon = if observe_first_at_zero {
        ys.len().saturating_sub(1)
    } else {
        ys.len()
    };

    let mut filter_means = Vec::with_capacity(horizon + 1);
    let mut filter_covs = Vec::with_capacity(horizon + 1);
    let mut pred_means = Vec::with_capacity(horizon + 1);
    let mut pred_covs = Vec::with_capacity(horizon + 1);
    let mut pred_loglik = Vec::with_capacity(ys.len());

    let mut obs_iter = ys.iter();
    let mut mean = spec.prior_mean.clone();
    let mut cov = spec.prior_cov.clone();

    for t in 0..=horizon {
        if t > 0 {
            mean = &spec.a * &mean;
            cov = &spec.a * &cov * spec.a.transpose() + &spec.q;
        }
        pred_means.push(mean.clone());
        pred_covs.push(cov.clone());

        let observed_here = t > 0 || observe_first_at_zero;
        if observed_here {
            let y = obs_iter.next().expect("observation count matches horizon");
            let innovation_cov = &spec.h * &cov * spec.h.transpose() + &spec.r;
            let s = Mvn::new(innovation_cov.clone())?;
            let y_pred = &spec.h * &mean;
            pred_loglik.push(s.logpdf(y, &y_pred));
            // K = P H^T S^{-1}, applied via the Cholesky solve.
            let gain = (&cov * spec.h.transpose()) * s.inverse();
            mean = &mean + &gain * (y - y_pred);
            let eye = DMatrix::identity(spec.state_dim(), spec.state_dim());
            cov = (&eye - &gain * &spec.h) * &cov;
        }
        filter_means.push(mean.clone());
        filter_covs.push(cov.clone());
    }

    // RTS backward pass.
    let mut smoother_means = filter_means.clone();
    let mut smoother_covs = filter_covs.clone();
    for t in (0..horizon).rev() {
        let pred_cov_next = &pred_covs[t + 1];
        let gain = &filter_covs[t]
            * spec.a.transpose()
            * Mvn::new(pred_cov_next.clone())?.inverse();
        smoother_means[t] =
            &filter_means[t] + &gain * (&smoother_means[t + 1] - &pred_means[t + 1]);
        smoother_covs[t] = &filter_covs[t]
            + &gain * (&smoother_covs[t + 1] - pred_cov_next) * gain.transpose();
    }

    Ok(KalmanRts {
        filter_means,
        filter_covs,
        pred_means,
        pred_covs,
        smoother_means,
        smoother_covs,
        pred_loglik,
    })
}

/// Simulate `n + 1` states and observations (times `0..=n`).
pub fn simulate_lg(
    spec: &LinearGaussianSpec,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>), ModelError> {
    let prior = Mvn::new(spec.prior_cov.clone())?;
    let trans = Mvn::new(spec.q.clone())?;
    let obs = Mvn::new(spec.r.clone())?;
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut x = prior.sample(&spec.prior_mean, rng);
    for _ in 0..=n {
        let y = obs.sample(&(&spec.h * &x), rng);
        xs.push(x.clone());
        ys.push(y);
        x = trans.sample(&(&spec.a * &x), rng);
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgProposal {
    /// Sample from the prior transition kernel.
    Bootstrap,
    /// The locally optimal proposal `propto q(x, .) g(., y)`; its weights are
    /// constant in the proposed point, which minimizes weight variance.
    LocallyOptimal,
}

pub struct LinearGaussianModel {
    spec: LinearGaussianSpec,
    proposal: LgProposal,
    trans: Mvn,
    obs: Mvn,
    /// Initial proposal distribution (time-0 posterior when conditioning on
    /// the first observation, otherwise the prior).
    init: Mvn,
    init_mean: DVector<f64>,
    prior: Mvn,
    first_obs: Option<DVector<f64>>,
    /// Locally optimal proposal pieces: covariance and its precision factors.
    opt: Option<LgOptimal>,
    /// `grad_theta log q` for a scalar parameter family, when attached.
    score_grad: Option<Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>>,
    param_dim: usize,
}

struct LgOptimal {
    cov: Mvn,
    q_inv_a: DMatrix<f64>,
    ht_r_inv: DMatrix<f64>,
}

/// Build the particle-filter view of a linear-Gaussian model.
///
/// `first_obs`: condition the initial proposal on the time-0 observation
/// (the ratio `chi * g_0 / rho_0` is then attached to the initial weights).
pub fn lg_model(
    spec: &LinearGaussianSpec,
    proposal: LgProposal,
    first_obs: Option<DVector<f64>>,
) -> Result<LinearGaussianModel, ModelError> {
    let trans = Mvn::new(spec.q.clone())?;
    let obs = Mvn::new(spec.r.clone())?;
    let prior = Mvn::new(spec.prior_cov.clone())?;

    let (init, init_mean) = match &first_obs {
        Some(y0) => {
            // Conjugate time-0 posterior.
            let p0_inv = prior.inverse();
            let r_inv = obs.inverse();
            let precision = &p0_inv + spec.h.transpose() * &r_inv * &spec.h;
            let cov = Mvn::new(precision.clone())?.inverse();
            let mean = &cov * (&p0_inv * &spec.prior_mean + spec.h.transpose() * &r_inv * y0);
            (Mvn::new(cov)?, mean)
        }
        None => (Mvn::new(spec.prior_cov.clone())?, spec.prior_mean.clone()),
    };

    let opt = match proposal {
        LgProposal::Bootstrap => None,
        LgProposal::LocallyOptimal => {
            let q_inv = trans.inverse();
            let r_inv = obs.inverse();
            let precision = &q_inv + spec.h.transpose() * &r_inv * &spec.h;
            let cov = Mvn::new(precision.clone())?.inverse();
            Some(LgOptimal {
                cov: Mvn::new(cov)?,
                q_inv_a: &q_inv * &spec.a,
                ht_r_inv: spec.h.transpose() * &r_inv,
            })
        }
    };

    Ok(LinearGaussianModel {
        spec: spec.clone(),
        proposal,
        trans,
        obs,
        init,
        init_mean,
        prior,
        first_obs,
        opt,
        score_grad: None,
        param_dim: 0,
    })
}

impl LinearGaussianModel {
    fn optimal_moments(&self, x: &DVector<f64>, y: &DVector<f64>) -> (DVector<f64>, &Mvn) {
        let opt = self.opt.as_ref().expect("optimal proposal configured");
        let info = &opt.q_inv_a * x + &opt.ht_r_inv * y;
        (opt.cov.cov_mul(&info), &opt.cov)
    }

    fn transition_density(&self, x: &[f64], x_next: &[f64]) -> f64 {
        let mean = &self.spec.a * DVector::from_row_slice(x);
        self.trans.pdf(&DVector::from_row_slice(x_next), &mean)
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.spec.state_dim()
    }

    fn obs_dim(&self) -> usize {
        self.spec.obs_dim()
    }

    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.init.sample(&self.init_mean, rng).iter().copied().collect()
    }

    fn initial_density_ratio(&self, x: &[f64]) -> f64 {
        match &self.first_obs {
            None => 1.0,
            Some(y0) => {
                // chi(x) g_0(x, y0) / rho_0(x), evaluated literally.
                let xv = DVector::from_row_slice(x);
                let chi = self.prior.pdf(&xv, &self.spec.prior_mean);
                let g0 = self.obs.pdf(y0, &(&self.spec.h * &xv));
                let rho = self.init.pdf(&xv, &self.init_mean);
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
        let xv = DVector::from_row_slice(x);
        match self.proposal {
            LgProposal::Bootstrap => {
                let mean = &self.spec.a * &xv;
                self.trans.sample(&mean, rng).iter().copied().collect()
            }
            LgProposal::LocallyOptimal => {
                let (mean, cov) = self.optimal_moments(&xv, &DVector::from_row_slice(y_next));
                cov.sample(&mean, rng).iter().copied().collect()
            }
        }
    }

    fn proposal_density(&self, _k: usize, x: &[f64], x_next: &[f64], y_next: &[f64]) -> f64 {
        let xv = DVector::from_row_slice(x);
        let xn = DVector::from_row_slice(x_next);
        match self.proposal {
            LgProposal::Bootstrap => self.trans.pdf(&xn, &(&self.spec.a * &xv)),
            LgProposal::LocallyOptimal => {
                let (mean, cov) = self.optimal_moments(&xv, &DVector::from_row_slice(y_next));
                cov.pdf(&xn, &mean)
            }
        }
    }

    fn obs_density(&self, _k: usize, x: &[f64], y: &[f64]) -> f64 {
        let mean = &self.spec.h * DVector::from_row_slice(x);
        self.obs.pdf(&DVector::from_row_slice(y), &mean)
    }

    fn transition_estimate(
        &self,
        _k: usize,
        x: &[f64],
        x_next: &[f64],
        _rng: &mut dyn RngCore,
    ) -> Result<DensityDraw, EstimateError> {
        Ok(DensityDraw::exact(self.transition_density(x, x_next)))
    }

    fn transition_estimate_is_positive(&self) -> bool {
        true
    }

    fn transition_estimate_sup(&self, _k: usize, x: &[f64], x_next: &[f64]) -> Option<f64> {
        // The estimator is deterministic, so its almost-sure bound is itself.
        Some(self.transition_density(x, x_next))
    }

    fn grad_log_transition_estimate(
        &self,
        _k: usize,
        x: &[f64],
        x_next: &[f64],
        _rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<f64>>, EstimateError> {
        Ok(self.score_grad.as_ref().map(|f| f(x, x_next)))
    }
}

/// Scalar family with `theta = [a]`, the transition coefficient. Used for
/// score and recursive-MLE tests against Kalman finite differences.
pub struct LgScalarFamily {
    pub template: LinearGaussianSpec,
    pub proposal: LgProposal,
}

impl LgScalarFamily {
    pub fn new(template: LinearGaussianSpec) -> Self {
        assert_eq!(template.state_dim(), 1);
        LgScalarFamily {
            template,
            proposal: LgProposal::Bootstrap,
        }
    }

    pub fn spec_at(&self, a: f64) -> LinearGaussianSpec {
        let mut spec = self.template.clone();
        spec.a[(0, 0)] = a;
        spec
    }
}

impl ModelFamily for LgScalarFamily {
    type Model = LinearGaussianModel;

    fn param_dim(&self) -> usize {
        1
    }

    fn model_at(&self, theta: &[f64]) -> LinearGaussianModel {
        let a = theta[0];
        let spec = self.spec_at(a);
        let q = spec.q[(0, 0)];
        let mut model = lg_model(&spec, self.proposal, None).expect("valid spec");
        model.param_dim = 1;
        // d/da log N(x'; a x, q) = (x' - a x) x / q.
        model.score_grad = Some(Box::new(move |x: &[f64], x_next: &[f64]| {
            vec![(x_next[0] - a * x[0]) * x[0] / q]
        }));
        model
    }
}
