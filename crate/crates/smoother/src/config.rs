/// How backward statistics are updated after each filter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingMethod {
    /// Self-normalized backward importance sampling with Wald-positivized
    /// weights. Works with any unbiased estimator, signed included.
    BackwardIS,
    /// Exact backward-kernel sampling by accept-reject. Requires a positive
    /// estimator and an almost-sure draw bound from the model.
    BackwardAR,
    /// Ancestral-line smoother (the path-space / poor man's baseline).
    PathSpace,
}

/// Particle and backward-sampling budget for one smoothing run.
#[derive(Debug, Clone)]
pub struct SmootherConfig {
    /// Number of particles N.
    pub n_particles: usize,
    /// Number of backward samples per particle (K tilde); usually much
    /// smaller than N. Ignored by `PathSpace`.
    pub n_backward: usize,
    pub method: SmoothingMethod,
    /// Cap on Wald positivization rounds; exceeding it is an error.
    pub wald_max_rounds: usize,
    /// Cap on accept-reject trials per backward sample.
    pub ar_max_trials: u64,
}

impl SmootherConfig {
    pub fn new(n_particles: usize, n_backward: usize) -> Self {
        assert!(n_particles >= 1);
        assert!(n_backward >= 1);
        SmootherConfig {
            n_particles,
            n_backward,
            method: SmoothingMethod::BackwardIS,
            wald_max_rounds: 1000,
            ar_max_trials: 1_000_000,
        }
    }

    pub fn with_method(mut self, method: SmoothingMethod) -> Self {
        self.method = method;
        self
    }

    /// The default backward-sample schedule `K = ceil(N^0.6)`, the largest
    /// rate at which no bias is visible on the benchmark models.
    pub fn default_backward_count(n_particles: usize) -> usize {
        (n_particles as f64).powf(0.6).ceil() as usize
    }
}
