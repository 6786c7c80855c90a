//! Checks that quality over scale is concave-down or monotonic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concavity {
    Consistent,
    Violated,
}

/// `Violated` iff some interior point lies strictly below a point on each
/// side of it (a valley). For triplets this is a strict interior minimum.
pub fn check_concavity(mos_by_scale: &[(f64, f64)]) -> Result<Concavity, StatsError> {
    if mos_by_scale.len() < 3 {
        return Err(StatsError::TooShort {
            need: 3,
            got: mos_by_scale.len(),
        });
    }
    if mos_by_scale.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(StatsError::Unsorted);
    }
    let q: Vec<f64> = mos_by_scale.iter().map(|p| p.1).collect();
    let n = q.len();
    let mut left_max = vec![f64::NEG_INFINITY; n];
    for i in 1..n {
        left_max[i] = left_max[i - 1].max(q[i - 1]);
    }
    let mut right_max = f64::NEG_INFINITY;
    for i in (1..n - 1).rev() {
        right_max = right_max.max(q[i + 1]);
        if q[i] < left_max[i] && q[i] < right_max {
            return Ok(Concavity::Violated);
        }
    }
    Ok(Concavity::Consistent)
}

/// Individual ratings collected at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingPool {
    pub scale: f64,
    pub ratings: Vec<f64>,
}

/// Fraction of bootstrap resamples whose mean ratings violate the
/// concavity assumption.
///
/// Draw order: one `ChaCha8Rng` seeded with `seed`; per resample, pools are
/// visited in order and each draws `len` indices with `random_range(0..len)`.
pub fn concavity_violation_probability(
    pools: &[RatingPool],
    n_resamples: usize,
    seed: u64,
) -> Result<f64, StatsError> {
    if let Some(i) = pools.iter().position(|p| p.ratings.is_empty()) {
        return Err(StatsError::EmptyPool(i));
    }
    if n_resamples == 0 {
        return Err(StatsError::Invalid("n_resamples must be >= 1".into()));
    }
    let mut points: Vec<(f64, f64)> = pools.iter().map(|p| (p.scale, 0.0)).collect();
    // Surface ordering and length errors before sampling.
    check_concavity(&points)?;
    let mut rng = rng_from_seed(seed);
    let mut violated = 0usize;
    for _ in 0..n_resamples {
        for (point, pool) in points.iter_mut().zip(pools) {
            let n = pool.ratings.len();
            let sum: f64 = (0..n).map(|_| pool.ratings[rng.random_range(0..n)]).sum();
            point.1 = sum / n as f64;
        }
        if check_concavity(&points)? == Concavity::Violated {
            violated += 1;
        }
    }
    Ok(violated as f64 / n_resamples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALES: [f64; 3] = [0.25, 0.5, 1.0];

    fn trip(q: [f64; 3]) -> Vec<(f64, f64)> {
        SCALES.iter().copied().zip(q).collect()
    }

    #[test]
    fn triplets() {
        assert_eq!(check_concavity(&trip([0.6, 0.7, 0.5])).unwrap(), Concavity::Consistent);
        assert_eq!(check_concavity(&trip([0.7, 0.5, 0.6])).unwrap(), Concavity::Violated);
        assert_eq!(check_concavity(&trip([0.5, 0.5, 0.5])).unwrap(), Concavity::Consistent);
    }

    #[test]
    fn plateau_valley_is_violation() {
        let pts = [(0.1, 0.7), (0.2, 0.5), (0.3, 0.5), (0.4, 0.6)];
        assert_eq!(check_concavity(&pts).unwrap(), Concavity::Violated);
        let pts = [(0.1, 0.5), (0.2, 0.6), (0.3, 0.6), (0.4, 0.4)];
        assert_eq!(check_concavity(&pts).unwrap(), Concavity::Consistent);
    }

    #[test]
    fn errors() {
        assert_eq!(check_concavity(&[(0.5, 0.1), (0.25, 0.2), (1.0, 0.3)]), Err(StatsError::Unsorted));
        assert!(matches!(check_concavity(&[(0.5, 0.1)]), Err(StatsError::TooShort { .. })));
        let pools = vec![
            RatingPool { scale: 0.25, ratings: vec![0.5] },
            RatingPool { scale: 0.5, ratings: vec![] },
        ];
        assert_eq!(concavity_violation_probability(&pools, 10, 0), Err(StatsError::EmptyPool(1)));
    }

    #[test]
    fn zero_variance_pools() {
        let pools = |q: [f64; 3]| -> Vec<RatingPool> {
            SCALES
                .iter()
                .zip(q)
                .map(|(&s, v)| RatingPool { scale: s, ratings: vec![v; 5] })
                .collect()
        };
        assert_eq!(concavity_violation_probability(&pools([0.6, 0.7, 0.5]), 100, 3).unwrap(), 0.0);
        assert_eq!(concavity_violation_probability(&pools([0.7, 0.5, 0.6]), 100, 3).unwrap(), 1.0);
    }
}
