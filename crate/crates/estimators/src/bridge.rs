//! Finite-dimensional Brownian bridge sampling.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::EstimatorError;

/// A bridge path observed at finitely many interior times, plus its pinned
/// endpoints `(0, x)` and `(horizon, y)`.
#[derive(Debug, Clone)]
pub struct BridgeSkeleton {
    horizon: f64,
    start: Vec<f64>,
    end: Vec<f64>,
    times: Vec<f64>,
    /// Row-major, one `dim`-vector per interior time.
    values: Vec<f64>,
}

impl BridgeSkeleton {
    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn value(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.values[j * d..(j + 1) * d]
    }

    pub fn n_interior(&self) -> usize {
        self.times.len()
    }

    /// Interior points in time order, as `(t, value)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.values.chunks(self.dim().max(1)))
    }
}

/// Sample a standard Brownian bridge from `(0, x)` to `(horizon, y)` at the
/// given strictly increasing interior times.
///
/// Coordinates are independent; sampling is sequential in time, each value
/// conditionally Gaussian with mean interpolating linearly toward `y` and
/// variance `(horizon - t_j)(t_j - t_{j-1}) / (horizon - t_{j-1})`.
pub fn sample_brownian_bridge_at(
    x: &[f64],
    y: &[f64],
    horizon: f64,
    times: &[f64],
    rng: &mut dyn RngCore,
) -> Result<BridgeSkeleton, EstimatorError> {
    assert_eq!(x.len(), y.len(), "endpoint dimensions differ");
    assert!(horizon > 0.0, "horizon must be positive");
    let d = x.len();
    let mut prev_t = 0.0;
    for (index, &t) in times.iter().enumerate() {
        if !(t > prev_t && t < horizon) {
            return Err(EstimatorError::BadTimes {
                index,
                value: t,
                horizon,
            });
        }
        prev_t = t;
    }

    let mut values = Vec::with_capacity(times.len() * d);
    let mut prev = x.to_vec();
    let mut prev_t = 0.0;
    for &t in times {
        let gap = t - prev_t;
        let remain = horizon - prev_t;
        let var = (horizon - t) * gap / remain;
        let sd = var.sqrt();
        for c in 0..d {
            let mean = prev[c] + gap / remain * (y[c] - prev[c]);
            let z: f64 = StandardNormal.sample(rng);
            let v = mean + sd * z;
            values.push(v);
            prev[c] = v;
        }
        prev_t = t;
    }

    Ok(BridgeSkeleton {
        horizon,
        start: x.to_vec(),
        end: y.to_vec(),
        times: times.to_vec(),
        values,
    })
}

/// Draw the bridge value at a new time `t`, conditionally on the skeleton.
///
/// Under the Wiener bridge measure the path between two adjacent known points
/// is again a Brownian bridge, so the conditional law given the skeleton is
/// Gaussian between the bracketing knots. If `t` coincides with a knot (or an
/// endpoint) its stored value is returned.
pub fn bridge_value_at(skel: &BridgeSkeleton, t: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    assert!(
        (0.0..=skel.horizon()).contains(&t),
        "query time outside [0, horizon]"
    );
    let d = skel.dim();
    if t == 0.0 {
        return skel.start().to_vec();
    }
    if t == skel.horizon() {
        return skel.end().to_vec();
    }
    // Bracketing knots.
    let mut lo_t = 0.0;
    let mut lo_v = skel.start();
    let mut hi_t = skel.horizon();
    let mut hi_v = skel.end();
    for (tj, vj) in skel.points() {
        if tj == t {
            return vj.to_vec();
        }
        if tj < t {
            lo_t = tj;
            lo_v = vj;
        } else {
            hi_t = tj;
            hi_v = vj;
            break;
        }
    }
    let gap = t - lo_t;
    let span = hi_t - lo_t;
    let var = (hi_t - t) * gap / span;
    let sd = var.sqrt();
    (0..d)
        .map(|c| {
            let mean = lo_v[c] + gap / span * (hi_v[c] - lo_v[c]);
            let z: f64 = StandardNormal.sample(rng);
            mean + sd * z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ssm_core::rng::RngFactory;

    #[test]
    fn empty_times_gives_endpoints_only() {
        let f = RngFactory::new(1);
        let skel =
            sample_brownian_bridge_at(&[1.0, 2.0], &[3.0, 4.0], 1.0, &[], &mut f.stream(&[0]))
                .unwrap();
        assert_eq!(skel.n_interior(), 0);
        assert_eq!(skel.start(), &[1.0, 2.0]);
        assert_eq!(skel.end(), &[3.0, 4.0]);
    }

    #[test]
    fn bad_times_rejected() {
        let f = RngFactory::new(1);
        let err = sample_brownian_bridge_at(&[0.0], &[0.0], 1.0, &[0.7, 0.4], &mut f.stream(&[0]));
        assert!(matches!(err, Err(EstimatorError::BadTimes { index: 1, .. })));
        let err = sample_brownian_bridge_at(&[0.0], &[0.0], 1.0, &[1.2], &mut f.stream(&[0]));
        assert!(matches!(err, Err(EstimatorError::BadTimes { index: 0, .. })));
    }

    #[test]
    fn midpoint_moments_match_closed_form() {
        // x = y = 0, horizon 1, t = 0.5: mean 0, variance t(1-t)/1 = 0.25.
        let f = RngFactory::new(7);
        let n = 100_000;
        let mut rng = f.stream(&[0]);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let skel = sample_brownian_bridge_at(&[0.0], &[0.0], 1.0, &[0.5], &mut rng).unwrap();
            let v = skel.value(0)[0];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se_mean = (0.25f64 / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "bridge mean {mean} off");
        let se_var = 0.25 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 0.25).abs() < 3.0 * se_var, "bridge variance {var} off");
    }

    #[test]
    fn quarter_point_mean_interpolates() {
        // x = 0, y = 4, horizon 1: E[w(0.25)] = 0 + 0.25 * 4 = 1.
        let f = RngFactory::new(8);
        let n = 100_000;
        let mut rng = f.stream(&[0]);
        let mut sum = 0.0;
        for _ in 0..n {
            let skel = sample_brownian_bridge_at(&[0.0], &[4.0], 1.0, &[0.25], &mut rng).unwrap();
            sum += skel.value(0)[0];
        }
        let mean = sum / n as f64;
        let var = 0.75 * 0.25; // (1-t)*t/1
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "bridge mean {mean} off from 1.0");
    }

    #[test]
    fn pair_covariance_matches_closed_form() {
        // cov(w_s, w_t) = s (1 - t) for s < t on a unit-horizon pinned bridge.
        let (s, t) = (0.3, 0.8);
        let f = RngFactory::new(9);
        let n = 200_000;
        let mut rng = f.stream(&[0]);
        let mut acc = 0.0;
        for _ in 0..n {
            let skel = sample_brownian_bridge_at(&[0.0], &[0.0], 1.0, &[s, t], &mut rng).unwrap();
            acc += skel.value(0)[0] * skel.value(1)[0];
        }
        let cov = acc / n as f64;
        let expect = s * (1.0 - t);
        assert!((cov - expect).abs() < 5e-3, "covariance {cov} vs {expect}");
    }

    #[test]
    fn conditional_interpolation_is_consistent() {
        // Interpolating the skeleton at a knot returns the knot value; at a new
        // time the conditional mean interpolates between neighbours.
        let f = RngFactory::new(10);
        let mut rng = f.stream(&[0]);
        let skel = sample_brownian_bridge_at(&[0.0], &[2.0], 2.0, &[0.5, 1.5], &mut rng).unwrap();
        let at_knot = bridge_value_at(&skel, 0.5, &mut rng);
        assert_eq!(at_knot, skel.value(0));

        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += bridge_value_at(&skel, 1.0, &mut rng)[0];
        }
        let mean = sum / n as f64;
        let expect = 0.5 * (skel.value(0)[0] + skel.value(1)[0]);
        let se = (0.25f64 / n as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "conditional mean {mean} vs {expect}");
    }
}
