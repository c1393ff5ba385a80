//! Small statistics toolkit for the Monte-Carlo experiments.
//!
//! Provides:
//! - `wilson_interval`: 95% score interval for a binomial proportion,
//! - `ks_statistic`: Kolmogorov–Smirnov distance between a sample and a
//!   continuous reference CDF,
//! - `mean_interval`: normal-approximation 95% interval for a sample mean.
//!
//! These are deliberately plain implementations: the experiments report
//! z-scores and intervals against closed-form targets, so nothing fancier
//! than the classical formulas is needed.

use crate::error::{Error, Result};

/// Two-sided 95% critical value of the standard normal distribution.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion at confidence `z`.
///
/// Returns `(low, high)`. Unlike the Wald interval it behaves sensibly at
/// proportions near 0 or 1 and never leaves `[0, 1]`.
///
/// # Errors
/// Domain error if `n == 0` or `successes > n`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::domain("wilson_interval: n must be positive"));
    }
    if successes > n {
        return Err(Error::domain(format!(
            "wilson_interval: successes {successes} exceed trials {n}"
        )));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Kolmogorov–Smirnov distance between `samples` and the continuous CDF `cdf`.
///
/// The usual one-sample statistic
/// `D = sup_x |F_n(x) − F(x)|`, evaluated at the sorted sample points from
/// both sides of each jump.
///
/// # Errors
/// Empty-sample error when `samples` is empty.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((f - below).abs()).max((above - f).abs());
    }
    Ok(d)
}

/// Sample mean with a 95% normal-approximation interval.
///
/// Returns `(mean, low, high)`; the interval is `mean ± z·s/√n` with the
/// unbiased sample standard deviation `s` (zero half-width when `n == 1`).
///
/// # Errors
/// Empty-sample error when `samples` is empty.
pub fn mean_interval(samples: &[f64], z: f64) -> Result<(f64, f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() == 1 {
        return Ok((mean, mean, mean));
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let half = z * (var / n).sqrt();
    Ok((mean, mean - half, mean + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_hand_computation() {
        // 50/100 at z = 1.96: center 0.5, half-width z*sqrt(0.25/100 + z^2/4e4)/(1+z^2/100).
        let (lo, hi) = wilson_interval(50, 100, Z_95).unwrap();
        assert!((lo - 0.403_831_5).abs() < 1e-6, "lo = {lo}");
        assert!((hi - 0.596_168_5).abs() < 1e-6, "hi = {hi}");
    }

    #[test]
    fn wilson_stays_in_unit_interval_at_extremes() {
        let (lo, hi) = wilson_interval(0, 20, Z_95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
        let (lo, hi) = wilson_interval(20, 20, Z_95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.65);
    }

    #[test]
    fn wilson_rejects_bad_input() {
        assert!(wilson_interval(1, 0, Z_95).is_err());
        assert!(wilson_interval(5, 4, Z_95).is_err());
    }

    #[test]
    fn ks_single_point() {
        // One sample at the median of U[0,1]: D = 0.5.
        let d = ks_statistic(&[0.5], |x| x).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_perfect_grid_is_half_spacing() {
        // Midpoints of n equal bins against U[0,1]: D = 1/(2n).
        let n = 100;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn ks_empty_errors() {
        assert!(matches!(
            ks_statistic(&[], |x| x),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn mean_interval_contains_mean() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (m, lo, hi) = mean_interval(&xs, Z_95).unwrap();
        assert!((m - 2.5).abs() < 1e-15);
        assert!(lo < m && m < hi);
    }
}
