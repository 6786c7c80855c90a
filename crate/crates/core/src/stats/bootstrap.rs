use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::seed::rng_from_seed;

/// Geometric mean, computed as `2^(mean(log2 x))`.
///
/// The result is clamped into `[min(x), max(x)]` to absorb rounding.
pub fn geometric_mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for &v in values {
        if !(v > 0.0) || !v.is_finite() {
            return Err(StatsError::NonPositive(v));
        }
        lo = lo.min(v);
        hi = hi.max(v);
        acc += v.log2();
    }
    Ok((acc / values.len() as f64).exp2().clamp(lo, hi))
}

/// Percentile with linear interpolation between closest ranks.
///
/// `sorted` must be ascending; `p` is in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub n_resamples: usize,
    pub resample_size: usize,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            n_resamples: 100,
            resample_size: 20,
            seed: 0,
        }
    }
}

/// Half-width of the 95% bootstrap interval of the geometric mean.
///
/// Draw order: one `ChaCha8Rng` seeded with `seed`; for each resample, draw
/// `resample_size` indices with `random_range(0..n)`. The interval is half the
/// distance between the 2.5th and 97.5th percentiles of the resampled means.
pub fn bootstrap_ci(opinions: &[f64], spec: BootstrapSpec) -> Result<f64, StatsError> {
    if opinions.is_empty() {
        return Err(StatsError::Empty);
    }
    if spec.n_resamples == 0 || spec.resample_size == 0 {
        return Err(StatsError::Invalid("resample counts must be >= 1".into()));
    }
    // Validate once up front so resampled slices cannot fail.
    geometric_mean(opinions)?;
    let mut rng = rng_from_seed(spec.seed);
    let n = opinions.len();
    let mut draw = vec![0.0; spec.resample_size];
    let mut means = Vec::with_capacity(spec.n_resamples);
    for _ in 0..spec.n_resamples {
        for slot in draw.iter_mut() {
            *slot = opinions[rng.random_range(0..n)];
        }
        means.push(geometric_mean(&draw)?);
    }
    means.sort_by(f64::total_cmp);
    let half = (percentile(&means, 97.5) - percentile(&means, 2.5)) / 2.0;
    Ok(half.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_mean_examples() {
        assert_eq!(geometric_mean(&[0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert!((geometric_mean(&[0.25, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((geometric_mean(&[0.2, 0.4, 0.8]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn geometric_mean_errors() {
        assert_eq!(geometric_mean(&[]), Err(StatsError::Empty));
        assert_eq!(geometric_mean(&[0.5, 0.0]), Err(StatsError::NonPositive(0.0)));
        assert!(geometric_mean(&[-0.1]).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 50.0), 2.5);
    }

    #[test]
    fn constant_opinions_have_zero_width() {
        let ops = vec![0.3; 20];
        assert_eq!(bootstrap_ci(&ops, BootstrapSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn seeded_and_non_negative() {
        let ops: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let spec = BootstrapSpec { seed: 11, ..BootstrapSpec::default() };
        let a = bootstrap_ci(&ops, spec).unwrap();
        assert_eq!(a, bootstrap_ci(&ops, spec).unwrap());
        assert!(a > 0.0);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(bootstrap_ci(&[], BootstrapSpec::default()), Err(StatsError::Empty));
    }
}
