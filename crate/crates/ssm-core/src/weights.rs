//! Weight normalization, effective sample size, and categorical resampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;

use crate::cloud::ParticleCloud;
use crate::error::CoreError;
use crate::math::kahan_sum;

fn check_finite(weights: &[f64]) -> Result<(), CoreError> {
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(CoreError::NonFiniteWeight { index, value });
        }
    }
    Ok(())
}

/// Normalize nonnegative weights to probabilities summing to one.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>, CoreError> {
    check_finite(weights)?;
    debug_assert!(weights.iter().all(|&w| w >= 0.0), "weights must be nonnegative");
    let total = kahan_sum(weights.iter().copied());
    if total <= 0.0 {
        return Err(CoreError::AllZeroWeights);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Effective sample size `(sum w)^2 / sum w^2`, in `[1, N]`.
pub fn ess(weights: &[f64]) -> Result<f64, CoreError> {
    check_finite(weights)?;
    let s = kahan_sum(weights.iter().copied());
    let s2 = kahan_sum(weights.iter().map(|w| w * w));
    if s <= 0.0 || s2 <= 0.0 {
        return Err(CoreError::AllZeroWeights);
    }
    Ok(s * s / s2)
}

/// `count` i.i.d. categorical draws with the given probabilities.
///
/// Deterministic given the rng state; the marginal of each draw is exactly
/// proportional to `probabilities`.
pub fn multinomial_indices(
    probabilities: &[f64],
    count: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<usize>, CoreError> {
    check_finite(probabilities)?;
    let dist = WeightedIndex::new(probabilities).map_err(|_| CoreError::AllZeroWeights)?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Self-normalized importance sampling estimate `Omega^{-1} sum_i w_i h(xi_i)`.
///
/// `h` writes the `out_dim`-dimensional value of the test function into its
/// second argument.
pub fn weighted_mean<H>(cloud: &ParticleCloud, out_dim: usize, h: H) -> Result<Vec<f64>, CoreError>
where
    H: Fn(&[f64], &mut [f64]),
{
    let probs = normalize_weights(cloud.weights())?;
    let mut out = vec![0.0; out_dim];
    let mut buf = vec![0.0; out_dim];
    for (i, p) in probs.iter().enumerate() {
        buf.iter_mut().for_each(|v| *v = 0.0);
        h(cloud.particle(i), &mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o += p * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngFactory;

    #[test]
    fn normalize_uniform() {
        let p = normalize_weights(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.25; 4]);
    }

    #[test]
    fn normalize_degenerate_mass() {
        let p = normalize_weights(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_proportional() {
        let p = normalize_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(p, vec![0.25, 0.75]);
    }

    #[test]
    fn normalize_rejects_all_zero() {
        assert_eq!(normalize_weights(&[0.0, 0.0]), Err(CoreError::AllZeroWeights));
    }

    #[test]
    fn normalize_rejects_non_finite() {
        assert!(matches!(
            normalize_weights(&[1.0, f64::NAN]),
            Err(CoreError::NonFiniteWeight { index: 1, .. })
        ));
        assert!(matches!(
            normalize_weights(&[f64::INFINITY, 1.0]),
            Err(CoreError::NonFiniteWeight { index: 0, .. })
        ));
    }

    #[test]
    fn ess_known_values() {
        assert!((ess(&[1.0, 1.0, 1.0, 1.0]).unwrap() - 4.0).abs() < 1e-12);
        assert!((ess(&[1.0, 0.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((ess(&[1.0, 1.0, 2.0]).unwrap() - 16.0 / 6.0).abs() < 1e-12);
        assert_eq!(ess(&[0.0, 0.0]), Err(CoreError::AllZeroWeights));
    }

    #[test]
    fn multinomial_degenerate() {
        let f = RngFactory::new(3);
        let idx = multinomial_indices(&[1.0, 0.0, 0.0], 4, &mut f.stream(&[0])).unwrap();
        assert_eq!(idx, vec![0, 0, 0, 0]);
    }

    #[test]
    fn multinomial_deterministic_given_seed() {
        let f = RngFactory::new(11);
        let a = multinomial_indices(&[0.2, 0.3, 0.5], 64, &mut f.stream(&[9])).unwrap();
        let b = multinomial_indices(&[0.2, 0.3, 0.5], 64, &mut f.stream(&[9])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multinomial_law_of_large_numbers() {
        let f = RngFactory::new(5);
        let n = 100_000;
        let idx = multinomial_indices(&[0.25; 4], n, &mut f.stream(&[1])).unwrap();
        let mut counts = [0usize; 4];
        for i in idx {
            counts[i] += 1;
        }
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq} too far from 0.25");
        }
    }

    #[test]
    fn weighted_mean_symmetry_and_arithmetic() {
        let c = ParticleCloud::initial(1, 0, vec![-1.0, 1.0], vec![1.0, 1.0]);
        let m = weighted_mean(&c, 1, |x, out| out[0] = x[0]).unwrap();
        assert!(m[0].abs() < 1e-15);

        let c = ParticleCloud::initial(1, 0, vec![0.0, 4.0], vec![1.0, 3.0]);
        let m = weighted_mean(&c, 1, |x, out| out[0] = x[0]).unwrap();
        assert!((m[0] - 3.0).abs() < 1e-14);
    }
}
