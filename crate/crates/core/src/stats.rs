//! Group-comparison and association statistics.
//!
//! Everything here is nonparametric or first-moment machinery for comparing
//! per-user measure distributions between groups: the two-sample
//! Kolmogorov-Smirnov test with the asymptotic p-value, Cliff's delta as
//! the effect size, Bonferroni correction for families of pairwise
//! comparisons, Pearson correlation, and normal-approximation confidence
//! intervals around means.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("correlation is undefined for a constant series")]
    ConstantSeries,
    #[error("need at least {required} values, got {got}")]
    TooFewValues { required: usize, got: usize },
    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),
}

/// One pairwise group comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    pub group_a: String,
    pub group_b: String,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub cliffs_delta: f64,
    pub alpha_adjusted: f64,
    pub significant: bool,
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// The statistic is the supremum over the pooled sample points of the
/// absolute ECDF difference; with ties, both distribution functions jump
/// together at the shared point, which the pooled walk accounts for. The
/// p-value uses the asymptotic Kolmogorov distribution at effective size
/// `m*n/(m+n)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a_sorted = a.to_vec();
    let mut b_sorted = b.to_vec();
    a_sorted.sort_by(f64::total_cmp);
    b_sorted.sort_by(f64::total_cmp);

    let (m, n) = (a_sorted.len(), b_sorted.len());
    let mut statistic = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < m || j < n {
        let point = match (a_sorted.get(i), b_sorted.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < m && a_sorted[i] <= point {
            i += 1;
        }
        while j < n && b_sorted[j] <= point {
            j += 1;
        }
        let difference = (i as f64 / m as f64 - j as f64 / n as f64).abs();
        statistic = statistic.max(difference);
    }

    let effective = (m * n) as f64 / (m + n) as f64;
    let p_value = kolmogorov_survival(effective.sqrt() * statistic);
    Ok((statistic, p_value))
}

/// Survival function `P(K > lambda)` of the Kolmogorov distribution.
///
/// Uses the alternating series for large arguments and the theta-function
/// form for small ones, where the alternating series converges slowly.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 1e-12 {
        return 1.0;
    }
    if lambda < 1.18 {
        let factor = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let q = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let cdf = factor * (q + q.powi(9) + q.powi(25) + q.powi(49));
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Cliff's delta `(#{x > y} - #{x < y}) / (m * n)`; positive means the
/// first sample is stochastically larger. Tied pairs count in neither
/// term. Counted exactly on sorted arrays via binary search.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut b_sorted = b.to_vec();
    b_sorted.sort_by(f64::total_cmp);
    let n = b_sorted.len();
    let mut greater: u64 = 0;
    let mut less: u64 = 0;
    for &x in a {
        let below = b_sorted.partition_point(|&y| y < x);
        let at_or_below = b_sorted.partition_point(|&y| y <= x);
        greater += below as u64;
        less += (n - at_or_below) as u64;
    }
    let pairs = (a.len() * n) as f64;
    Ok((greater as f64 - less as f64) / pairs)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewValues {
            required: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        covariance += (a - mean_x) * (b - mean_y);
        var_x += (a - mean_x).powi(2);
        var_y += (b - mean_y).powi(2);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    Ok((covariance / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Per-comparison significance level `alpha / n` for a family of `n`
/// comparisons. Panics if `n_comparisons` is zero.
pub fn bonferroni(alpha: f64, n_comparisons: usize) -> f64 {
    assert!(n_comparisons >= 1, "need at least one comparison");
    alpha / n_comparisons as f64
}

/// Mean with a normal-approximation confidence interval
/// `mean ± z * sd / sqrt(n)` at the given level.
pub fn mean_ci(xs: &[f64], level: f64) -> Result<(f64, f64, f64), StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFewValues {
            required: 2,
            got: xs.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z = normal.inverse_cdf(0.5 + level / 2.0);
    let half_width = z * variance.sqrt() / n.sqrt();
    Ok((mean, mean - half_width, mean + half_width))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_samples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (d, p) = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn ks_disjoint_supports() {
        let (d, p) = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(d, 1.0);
        assert!(p < 0.2);
    }

    #[test]
    fn ks_interleaved_hand_walked() {
        // pooled grid walk of ECDFs gives sup difference 1/3
        let (d, _) = ks_two_sample(&[1.0, 3.0, 5.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_is_symmetric() {
        let a = [0.3, 1.7, 2.2, 5.0];
        let b = [0.1, 1.9, 3.3];
        let (d_ab, p_ab) = ks_two_sample(&a, &b).unwrap();
        let (d_ba, p_ba) = ks_two_sample(&b, &a).unwrap();
        assert_eq!(d_ab, d_ba);
        assert_eq!(p_ab, p_ba);
    }

    #[test]
    fn ks_rejects_empty_sample() {
        assert_eq!(
            ks_two_sample(&[], &[1.0]).unwrap_err(),
            StatsError::EmptySample
        );
    }

    #[test]
    fn kolmogorov_survival_reference_points() {
        // Q(0.828) ~ 0.5 (the distribution's median is ~0.8276)
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
        assert!(kolmogorov_survival(2.0) < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn cliffs_delta_hand_cases() {
        assert_eq!(cliffs_delta(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), -1.0);
        assert_eq!(cliffs_delta(&[1.0, 4.0], &[2.0, 3.0]).unwrap(), 0.0);
        let same = [1.0, 2.0, 3.0];
        assert_eq!(cliffs_delta(&same, &same).unwrap(), 0.0);
    }

    #[test]
    fn cliffs_delta_is_antisymmetric() {
        let a = [1.0, 5.0, 2.0, 2.0];
        let b = [3.0, 2.0, 4.0];
        assert_eq!(
            cliffs_delta(&a, &b).unwrap(),
            -cliffs_delta(&b, &a).unwrap()
        );
    }

    #[test]
    fn pearson_exact_cases() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson_r(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_r(&x, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_covariance_oracle_case() {
        // computed from the covariance formula with an independent calculator
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 5.0, 4.0];
        assert!((pearson_r(&x, &y).unwrap() - 0.7181848464596078).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_series() {
        assert_eq!(
            pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatsError::ConstantSeries
        );
    }

    #[test]
    fn bonferroni_values() {
        assert!((bonferroni(0.05, 15) - 3.333333333333333e-3).abs() < 1e-15);
        assert_eq!(bonferroni(0.05, 1), 0.05);
        assert_eq!(bonferroni(1.0, 4), 0.25);
    }

    #[test]
    fn mean_ci_zero_width_for_equal_values() {
        let (mean, lo, hi) = mean_ci(&[2.5, 2.5, 2.5], 0.95).unwrap();
        assert_eq!((mean, lo, hi), (2.5, 2.5, 2.5));
    }

    #[test]
    fn mean_ci_symmetric_sample_centers_at_zero() {
        let (mean, lo, hi) = mean_ci(&[-1.0, 1.0], 0.95).unwrap();
        assert_eq!(mean, 0.0);
        assert!((lo + hi).abs() < 1e-15);
    }

    #[test]
    fn mean_ci_uses_the_95_percent_quantile() {
        // half-width = z * sd / sqrt(n) with z = 1.959964 at 95%
        let xs = [0.0, 2.0, 4.0, 6.0];
        let (_, lo, hi) = mean_ci(&xs, 0.95).unwrap();
        let sd = (20.0f64 / 3.0).sqrt();
        let expected = 1.9599639845400545 * sd / 2.0;
        assert!(((hi - lo) / 2.0 - expected).abs() < 1e-9);
    }

    #[test]
    fn mean_ci_covers_a_seeded_standard_normal_sample() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let (mean, lo, hi) = mean_ci(&xs, 0.95).unwrap();
        assert!(lo <= 0.0 && 0.0 <= hi, "true mean outside [{lo}, {hi}]");
        assert!(lo <= mean && mean <= hi);
        // width ~ 2 * 1.96 / sqrt(10^4) for unit variance
        assert!(((hi - lo) - 0.0392).abs() < 0.002, "width {}", hi - lo);
    }

    #[test]
    fn mean_ci_rejects_tiny_samples_and_bad_levels() {
        assert_eq!(
            mean_ci(&[1.0], 0.95).unwrap_err(),
            StatsError::TooFewValues {
                required: 2,
                got: 1
            }
        );
        assert_eq!(
            mean_ci(&[1.0, 2.0], 1.0).unwrap_err(),
            StatsError::InvalidLevel(1.0)
        );
    }
}
