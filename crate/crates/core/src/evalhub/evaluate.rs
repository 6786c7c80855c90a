use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EvalError, Split};
use crate::stats::{metric_report, MetricReport, MoisRecord};
use crate::tables::PredictionRow;

/// Predicted IIS per image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionTable {
    pub predictions: BTreeMap<String, f64>,
}

impl PredictionTable {
    pub fn from_rows(rows: &[PredictionRow]) -> Self {
        Self {
            predictions: rows.iter().map(|r| (r.image_id.clone(), r.predicted_iis)).collect(),
        }
    }

    pub fn rows(&self) -> Vec<PredictionRow> {
        self.predictions
            .iter()
            .map(|(k, v)| PredictionRow {
                image_id: k.clone(),
                predicted_iis: *v,
            })
            .collect()
    }

    pub fn insert(&mut self, image_id: impl Into<String>, value: f64) {
        self.predictions.insert(image_id.into(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_split: Vec<MetricReport>,
    /// Per-metric median across splits.
    pub median: MetricReport,
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Test-set metrics per split and their per-metric medians. Undefined
/// correlations are left out of the corresponding median.
pub fn evaluate(
    pred: &PredictionTable,
    gt: &[MoisRecord],
    splits: &[Split],
) -> Result<EvalReport, EvalError> {
    let truth: BTreeMap<&str, f64> = gt.iter().map(|r| (r.image_id.as_str(), r.mois)).collect();
    let mut missing_pred = BTreeSet::new();
    let mut missing_gt = BTreeSet::new();
    for id in splits.iter().flat_map(|s| &s.test) {
        if !pred.predictions.contains_key(id) {
            missing_pred.insert(id.clone());
        }
        if !truth.contains_key(id.as_str()) {
            missing_gt.insert(id.clone());
        }
    }
    if !missing_pred.is_empty() {
        return Err(EvalError::MissingPredictions(missing_pred.into_iter().collect()));
    }
    if !missing_gt.is_empty() {
        return Err(EvalError::MissingGroundTruth(missing_gt.into_iter().collect()));
    }
    let per_split = splits
        .iter()
        .map(|s| {
            let p: Vec<f64> = s.test.iter().map(|id| pred.predictions[id]).collect();
            let g: Vec<f64> = s.test.iter().map(|id| truth[id.as_str()]).collect();
            metric_report(&p, &g)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let median = MetricReport {
        srcc: median(per_split.iter().filter_map(|m| m.srcc).collect()),
        plcc: median(per_split.iter().filter_map(|m| m.plcc).collect()),
        rmse: median(per_split.iter().map(|m| m.rmse).collect()).unwrap_or(f64::NAN),
        mae: median(per_split.iter().map(|m| m.mae).collect()).unwrap_or(f64::NAN),
    };
    Ok(EvalReport { per_split, median })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalhub::{make_splits, SplitSpec};

    fn gt(n: usize) -> Vec<MoisRecord> {
        (0..n)
            .map(|i| MoisRecord {
                image_id: format!("i{i:02}"),
                mois: 0.05 + 0.9 * i as f64 / n as f64,
                ci95: 0.0,
                n_opinions: 20,
            })
            .collect()
    }

    #[test]
    fn perfect_and_reversed_predictions() {
        let gt = gt(40);
        let ids: Vec<String> = gt.iter().map(|r| r.image_id.clone()).collect();
        let splits = make_splits(&ids, &SplitSpec::with_seed(2)).unwrap();
        let mut same = PredictionTable::default();
        let mut rev = PredictionTable::default();
        for r in &gt {
            same.insert(&r.image_id, r.mois);
            rev.insert(&r.image_id, 1.0 - r.mois);
        }
        let rep = evaluate(&same, &gt, &splits).unwrap();
        assert_eq!(rep.median.srcc, Some(1.0));
        assert_eq!(rep.median.rmse, 0.0);
        let rep = evaluate(&rev, &gt, &splits).unwrap();
        assert_eq!(rep.median.srcc, Some(-1.0));
        assert!((rep.median.plcc.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_prediction_is_named() {
        let gt = gt(12);
        let ids: Vec<String> = gt.iter().map(|r| r.image_id.clone()).collect();
        let splits = make_splits(&ids, &SplitSpec { n_repeats: 1, ..SplitSpec::with_seed(2) }).unwrap();
        let mut pred = PredictionTable::default();
        for r in gt.iter() {
            if r.image_id != splits[0].test[0] {
                pred.insert(&r.image_id, r.mois);
            }
        }
        match evaluate(&pred, &gt, &splits) {
            Err(EvalError::MissingPredictions(ids)) => assert_eq!(ids, vec![splits[0].test[0].clone()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }
}
