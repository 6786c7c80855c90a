use serde::{Deserialize, Serialize};

use super::StatsError;

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < min {
        return Err(StatsError::TooShort {
            need: min,
            got: x.len(),
        });
    }
    Ok(())
}

/// Fractional ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation, `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
///
/// `Ok(None)` marks an undefined coefficient (a constant input).
pub fn srcc(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    check_pair(x, y, 2)?;
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

pub fn plcc(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    check_pair(x, y, 2)?;
    Ok(pearson(x, y))
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 1)?;
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / x.len() as f64).sqrt())
}

pub fn mae(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 1)?;
    let abs: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    Ok(abs / x.len() as f64)
}

/// Correlation and error metrics of a prediction vector against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub srcc: Option<f64>,
    pub plcc: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
}

pub fn metric_report(pred: &[f64], gt: &[f64]) -> Result<MetricReport, StatsError> {
    Ok(MetricReport {
        srcc: srcc(pred, gt)?,
        plcc: plcc(pred, gt)?,
        rmse: rmse(pred, gt)?,
        mae: mae(pred, gt)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_reversed() {
        assert_eq!(srcc(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), Some(1.0));
        assert_eq!(srcc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert_eq!(srcc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert_eq!(plcc(&[1.0, 2.0], &[4.0, 4.0]).unwrap(), None);
    }

    #[test]
    fn length_checks() {
        assert_eq!(
            srcc(&[1.0, 2.0], &[1.0]),
            Err(StatsError::LengthMismatch { left: 2, right: 1 })
        );
        assert!(matches!(srcc(&[1.0], &[1.0]), Err(StatsError::TooShort { .. })));
        assert_eq!(rmse(&[2.0], &[1.0]).unwrap(), 1.0);
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn swapped_pair() {
        let r = metric_report(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(r.plcc, Some(-1.0));
        assert_eq!(r.rmse, 1.0);
        assert_eq!(r.mae, 1.0);
    }
}
