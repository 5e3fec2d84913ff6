//! Small numeric helpers shared across the workspace.

use std::f64::consts::PI;

/// Neumaier-compensated summation. Weight sums feed normalization checks with
/// 1e-12 tolerances, which plain summation does not reliably meet at N ~ 5000.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Density of N(mean, var) at `x`.
#[inline]
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-z * z / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Log-density of N(mean, var) at `x`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * (z * z / var + (2.0 * PI * var).ln())
}

/// Density at `x` of an isotropic Gaussian N(mean, var * I) in d dimensions.
#[inline]
pub fn isotropic_normal_pdf(x: &[f64], mean: &[f64], var: f64) -> f64 {
    debug_assert_eq!(x.len(), mean.len());
    let mut q = 0.0;
    for (a, b) in x.iter().zip(mean) {
        let z = a - b;
        q += z * z;
    }
    (-q / (2.0 * var)).exp() / (2.0 * PI * var).powf(0.5 * x.len() as f64)
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        // 1 + 1e-16 repeated: naive summation drops every tiny term.
        let mut vals = vec![1.0];
        vals.extend(std::iter::repeat(1e-16).take(10_000));
        let s = kahan_sum(vals.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn normal_pdf_matches_logpdf() {
        for &(x, m, v) in &[(0.3, 0.0, 1.0), (-2.0, 1.5, 0.25), (4.0, 4.0, 3.0)] {
            assert!((normal_pdf(x, m, v).ln() - normal_logpdf(x, m, v)).abs() < 1e-12);
        }
    }

    #[test]
    fn isotropic_factorizes() {
        let x = [0.1, -0.4, 2.0];
        let m = [0.0, 0.0, 1.0];
        let per_coord: f64 = x
            .iter()
            .zip(&m)
            .map(|(a, b)| normal_pdf(*a, *b, 0.7))
            .product();
        assert!((isotropic_normal_pdf(&x, &m, 0.7) - per_coord).abs() < 1e-15);
    }
}
