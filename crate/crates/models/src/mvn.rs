//! Internal multivariate normal helper built on a cached Cholesky factor.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::ModelError;

pub(crate) struct Mvn {
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl Mvn {
    pub fn new(cov: DMatrix<f64>) -> Result<Self, ModelError> {
        let d = cov.nrows();
        let chol = Cholesky::new(cov).ok_or(ModelError::SingularCovariance)?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Mvn { chol, log_norm })
    }

    pub fn sample(&self, mean: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let d = mean.len();
        let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
        mean + self.chol.l() * z
    }

    pub fn logpdf(&self, x: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        let diff = x - mean;
        let s = self.chol.solve(&diff);
        self.log_norm - 0.5 * diff.dot(&s)
    }

    pub fn pdf(&self, x: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        self.logpdf(x, mean).exp()
    }

    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// Covariance times a vector, via the cached factor: `L (L^T v)`.
    pub fn cov_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        let lt_v = self.chol.l().transpose() * v;
        self.chol.l() * lt_v
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}
