//! Property tests for the weight utilities.

use proptest::prelude::*;
use ssm_core::rng::RngFactory;
use ssm_core::{ess, multinomial_indices, normalize_weights, weighted_mean, ParticleCloud};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn positive_weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1e6, 1..64)
}

proptest! {
    // normalize(c * w) == normalize(w) for every c > 0.
    #[test]
    fn normalize_is_scale_invariant(w in positive_weights(), c in 1e-6f64..1e6) {
        let base = normalize_weights(&w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let other = normalize_weights(&scaled).unwrap();
        for (a, b) in base.iter().zip(&other) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn ess_within_bounds(w in positive_weights()) {
        let e = ess(&w).unwrap();
        prop_assert!(e >= 1.0 - 1e-9);
        prop_assert!(e <= w.len() as f64 + 1e-9);
    }

    // weighted_mean is invariant under a joint permutation of particles and weights.
    #[test]
    fn weighted_mean_permutation_invariant(
        pairs in prop::collection::vec((0.1f64..10.0, -100.0f64..100.0), 2..32),
        rot in 0usize..31,
    ) {
        let n = pairs.len();
        let rot = rot % n;
        let (w, x): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let cloud = ParticleCloud::initial(1, 0, x.clone(), w.clone());
        let base = weighted_mean(&cloud, 1, |p, out| out[0] = p[0]).unwrap();

        let mut perm: Vec<(f64, f64)> = pairs.clone();
        perm.rotate_left(rot);
        let (wp, xp): (Vec<f64>, Vec<f64>) = perm.iter().copied().unzip();
        let cloud_p = ParticleCloud::initial(1, 0, xp, wp);
        let perm_mean = weighted_mean(&cloud_p, 1, |p, out| out[0] = p[0]).unwrap();

        prop_assert!((base[0] - perm_mean[0]).abs() <= 1e-12 * base[0].abs().max(1.0));
    }
}

// Marginal frequencies of the categorical sampler pass a chi-squared test at
// 1e5 draws.
#[test]
fn multinomial_chi_squared() {
    let probs = [0.1, 0.2, 0.3, 0.4];
    let n = 100_000usize;
    let factory = RngFactory::new(20240817);
    let idx = multinomial_indices(&probs, n, &mut factory.stream(&[0])).unwrap();
    let mut counts = [0f64; 4];
    for i in idx {
        counts[i] += 1.0;
    }
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(c, p)| {
            let expect = p * n as f64;
            (c - expect) * (c - expect) / expect
        })
        .sum();
    let chi2 = ChiSquared::new(3.0).unwrap();
    let p_value = 1.0 - chi2.cdf(stat);
    assert!(p_value > 0.001, "chi-squared p-value {p_value} too small (stat {stat})");
}
