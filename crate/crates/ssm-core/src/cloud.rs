//! Weighted particle systems with per-particle backward statistics.

use crate::error::CoreError;
use crate::math::kahan_sum;

/// The particle system at one time step: positions `xi_k^i`, weights
/// `omega_k^i`, backward statistics `tau_k^i` and ancestor indices `I_k^i`.
///
/// Snapshots are immutable once a step completes; the smoother builds the
/// next cloud rather than mutating the current one. Storage is flat
/// row-major, particle `i` occupying `[i*d, (i+1)*d)`.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    step: usize,
    dim: usize,
    stat_dim: usize,
    particles: Vec<f64>,
    weights: Vec<f64>,
    stats: Vec<f64>,
    ancestors: Vec<usize>,
}

impl ParticleCloud {
    /// Cloud at step 0: backward statistics are zero and each particle is its
    /// own ancestor.
    ///
    /// Panics if array lengths are inconsistent with `dim`.
    pub fn initial(dim: usize, stat_dim: usize, particles: Vec<f64>, weights: Vec<f64>) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        assert_eq!(particles.len(), weights.len() * dim, "particle/weight size mismatch");
        let n = weights.len();
        ParticleCloud {
            step: 0,
            dim,
            stat_dim,
            particles,
            weights,
            stats: vec![0.0; n * stat_dim],
            ancestors: (0..n).collect(),
        }
    }

    /// Assemble a cloud for step `step` from raw parts.
    ///
    /// Panics if the array lengths disagree.
    pub fn from_parts(
        step: usize,
        dim: usize,
        stat_dim: usize,
        particles: Vec<f64>,
        weights: Vec<f64>,
        stats: Vec<f64>,
        ancestors: Vec<usize>,
    ) -> Self {
        let n = weights.len();
        assert_eq!(particles.len(), n * dim, "particle array size mismatch");
        assert_eq!(stats.len(), n * stat_dim, "stats array size mismatch");
        assert_eq!(ancestors.len(), n, "ancestor array size mismatch");
        ParticleCloud {
            step,
            dim,
            stat_dim,
            particles,
            weights,
            stats,
            ancestors,
        }
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn n_particles(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stat_dim(&self) -> usize {
        self.stat_dim
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.particles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stat(&self, i: usize) -> &[f64] {
        &self.stats[i * self.stat_dim..(i + 1) * self.stat_dim]
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn ancestors(&self) -> &[usize] {
        &self.ancestors
    }

    /// Omega_k, the weight sum.
    pub fn total_weight(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }

    /// Effective sample size of the current weights.
    pub fn ess(&self) -> Result<f64, CoreError> {
        crate::weights::ess(&self.weights)
    }

    /// The self-normalized estimate `sum_i (omega_i / Omega) tau_i`, i.e. the
    /// filtering expectation of the backward statistic. At the final step this
    /// is the online smoothing estimator of the additive functional.
    pub fn weighted_stat_mean(&self) -> Result<Vec<f64>, CoreError> {
        let probs = crate::weights::normalize_weights(&self.weights)?;
        let mut out = vec![0.0; self.stat_dim];
        for (i, p) in probs.iter().enumerate() {
            let row = self.stat(i);
            for (o, v) in out.iter_mut().zip(row) {
                *o += p * v;
            }
        }
        Ok(out)
    }
}
