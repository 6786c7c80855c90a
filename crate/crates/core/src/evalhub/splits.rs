use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seed::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub n_repeats: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.1,
            test: 0.2,
            n_repeats: 10,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        let fr = [self.train, self.val, self.test];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || ((fr.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(EvalError::InvalidSpec(format!("fractions {fr:?} must be in [0,1] and sum to 1")));
        }
        if self.n_repeats < 1 {
            return Err(EvalError::InvalidSpec("n_repeats must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

fn floor_count(frac: f64, n: usize) -> usize {
    // The epsilon keeps exact products such as 0.7 * 10 from flooring down.
    (frac * n as f64 + 1e-9).floor() as usize
}

/// `n_repeats` random train/val/test partitions.
///
/// Repeat `k` shuffles the sorted ids with a stream derived from
/// `(seed, k)`, then takes `floor(train * N)` for training,
/// `floor(val * N)` for validation and the remainder for testing.
pub fn make_splits(image_ids: &[String], spec: &SplitSpec) -> Result<Vec<Split>, EvalError> {
    spec.validate()?;
    if image_ids.len() < 10 {
        return Err(EvalError::TooFewImages {
            need: 10,
            got: image_ids.len(),
        });
    }
    let mut sorted = image_ids.to_vec();
    sorted.sort();
    sorted.dedup();
    let n = sorted.len();
    let n_train = floor_count(spec.train, n);
    let n_val = floor_count(spec.val, n);
    Ok((0..spec.n_repeats)
        .map(|k| {
            let mut ids = sorted.clone();
            ids.shuffle(&mut derived_rng(spec.seed, &["split", &k.to_string()]));
            let test = ids.split_off(n_train + n_val);
            let val = ids.split_off(n_train);
            Split { train: ids, val, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("i{i}")).collect()
    }

    #[test]
    fn sizes() {
        let s = make_splits(&ids(785), &SplitSpec::with_seed(1)).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!((s[0].train.len(), s[0].val.len(), s[0].test.len()), (549, 78, 158));
        let s = make_splits(&ids(10), &SplitSpec::with_seed(1)).unwrap();
        assert_eq!((s[0].train.len(), s[0].val.len(), s[0].test.len()), (7, 1, 2));
    }

    #[test]
    fn disjoint_exhaustive_reproducible() {
        let all = ids(123);
        let a = make_splits(&all, &SplitSpec::with_seed(5)).unwrap();
        assert_eq!(a, make_splits(&all, &SplitSpec::with_seed(5)).unwrap());
        for s in &a {
            let mut u: BTreeSet<&String> = BTreeSet::new();
            for id in s.train.iter().chain(&s.val).chain(&s.test) {
                assert!(u.insert(id));
            }
            assert_eq!(u.len(), 123);
        }
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(make_splits(&ids(9), &SplitSpec::default()), Err(EvalError::TooFewImages { .. })));
        let bad = SplitSpec { train: 0.8, ..SplitSpec::default() };
        assert!(matches!(make_splits(&ids(20), &bad), Err(EvalError::InvalidSpec(_))));
    }
}
