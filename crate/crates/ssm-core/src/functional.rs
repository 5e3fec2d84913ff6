//! Additive smoothing functionals `H(x_{0:n}) = sum_{k<n} h_k(x_k, x_{k+1})`.
//!
//! A functional is specified by its per-step increment maps `h_k`. The
//! convention for state extraction: the state at time `k* < n` is read off
//! the *source* argument of increment `k*`, and the state at the final time
//! `n` off the *target* argument of increment `n-1`. Functionals over an
//! empty horizon are identically zero.

/// A vector-valued additive functional of the latent path.
pub trait AdditiveFunctional: Send + Sync {
    /// Output dimension d'.
    fn out_dim(&self) -> usize;

    /// Add `h_k(x, x_next)` into `acc` (length `out_dim`).
    fn add_increment(&self, k: usize, x: &[f64], x_next: &[f64], acc: &mut [f64]);
}

/// `H = x_{k*}`: the marginal state at one time index. Used for state
/// estimation at a fixed time.
#[derive(Debug, Clone)]
pub struct StateAt {
    index: usize,
    horizon: usize,
    dim: usize,
}

impl StateAt {
    /// Target `x_{index}` on a path of final time `horizon` (so `horizon`
    /// increments exist). Requires `horizon >= 1` and `index <= horizon`.
    pub fn new(index: usize, horizon: usize, dim: usize) -> Self {
        assert!(horizon >= 1, "need at least one increment");
        assert!(index <= horizon);
        StateAt { index, horizon, dim }
    }
}

impl AdditiveFunctional for StateAt {
    fn out_dim(&self) -> usize {
        self.dim
    }

    fn add_increment(&self, k: usize, x: &[f64], x_next: &[f64], acc: &mut [f64]) {
        if self.index < self.horizon {
            if k == self.index {
                for (a, v) in acc.iter_mut().zip(x) {
                    *a += v;
                }
            }
        } else if k == self.horizon - 1 {
            for (a, v) in acc.iter_mut().zip(x_next) {
                *a += v;
            }
        }
    }
}

/// `H = sum_{k=0}^{horizon} x_k / (horizon + 1)`: the time-averaged state.
#[derive(Debug, Clone)]
pub struct StateMean {
    horizon: usize,
    dim: usize,
    scale: f64,
}

impl StateMean {
    pub fn new(horizon: usize, dim: usize) -> Self {
        assert!(horizon >= 1);
        StateMean {
            horizon,
            dim,
            scale: 1.0 / (horizon as f64 + 1.0),
        }
    }
}

impl AdditiveFunctional for StateMean {
    fn out_dim(&self) -> usize {
        self.dim
    }

    fn add_increment(&self, k: usize, x: &[f64], x_next: &[f64], acc: &mut [f64]) {
        for (a, v) in acc.iter_mut().zip(x) {
            *a += self.scale * v;
        }
        if k == self.horizon - 1 {
            for (a, v) in acc.iter_mut().zip(x_next) {
                *a += self.scale * v;
            }
        }
    }
}

/// `H = (x_0, ..., x_horizon)` stacked: every marginal state at once, for
/// trajectory tracking. Output dimension is `dim * (horizon + 1)`.
#[derive(Debug, Clone)]
pub struct AllStates {
    horizon: usize,
    dim: usize,
}

impl AllStates {
    pub fn new(horizon: usize, dim: usize) -> Self {
        assert!(horizon >= 1);
        AllStates { horizon, dim }
    }
}

impl AdditiveFunctional for AllStates {
    fn out_dim(&self) -> usize {
        self.dim * (self.horizon + 1)
    }

    fn add_increment(&self, k: usize, x: &[f64], x_next: &[f64], acc: &mut [f64]) {
        let block = &mut acc[k * self.dim..(k + 1) * self.dim];
        for (a, v) in block.iter_mut().zip(x) {
            *a += v;
        }
        if k == self.horizon - 1 {
            let block = &mut acc[self.horizon * self.dim..(self.horizon + 1) * self.dim];
            for (a, v) in block.iter_mut().zip(x_next) {
                *a += v;
            }
        }
    }
}

/// `H = n`: counts propagation steps. A constants-only functional whose exact
/// value survives every self-normalization; useful as a smoke test.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepCount;

impl AdditiveFunctional for StepCount {
    fn out_dim(&self) -> usize {
        1
    }

    fn add_increment(&self, _k: usize, _x: &[f64], _x_next: &[f64], acc: &mut [f64]) {
        acc[0] += 1.0;
    }
}
