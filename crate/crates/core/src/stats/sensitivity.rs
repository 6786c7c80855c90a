//! Leverage of scale over quality: `gamma = |dS| / |dQ|`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageReport {
    pub delta_s: f64,
    pub delta_q: f64,
    pub gamma: f64,
    /// Pairs averaged into `delta_q` (1 for a direct computation).
    pub n_pairs: usize,
}

pub fn leverage(delta_s: f64, delta_q: f64) -> Result<LeverageReport, StatsError> {
    if delta_q == 0.0 || !delta_q.is_finite() {
        return Err(StatsError::ZeroQualityChange);
    }
    Ok(LeverageReport {
        delta_s: delta_s.abs(),
        delta_q: delta_q.abs(),
        gamma: delta_s.abs() / delta_q.abs(),
        n_pairs: 1,
    })
}

/// Quality of one image at two resolutions, normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPair {
    pub mos_hi: f64,
    pub mos_lo: f64,
    pub delta_s: f64,
}

/// Per-`delta_s` leverage over pairs whose higher-resolution MOS is below
/// `mos_cutoff`. `dQ` is the mean of `mos_lo - mos_hi` within a bucket.
/// Buckets whose mean quality change is exactly zero are omitted.
pub fn sensitivity_table(pairs: &[SensitivityPair], mos_cutoff: f64) -> Vec<LeverageReport> {
    // Bucket key: delta_s to 1e-6.
    let mut buckets: BTreeMap<i64, (f64, Vec<f64>)> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.mos_hi < mos_cutoff) {
        let key = (p.delta_s * 1e6).round() as i64;
        buckets
            .entry(key)
            .or_insert_with(|| (p.delta_s, Vec::new()))
            .1
            .push(p.mos_lo - p.mos_hi);
    }
    buckets
        .into_values()
        .filter_map(|(ds, dqs)| {
            let mean = dqs.iter().sum::<f64>() / dqs.len() as f64;
            leverage(ds, mean).ok().map(|r| LeverageReport {
                n_pairs: dqs.len(),
                ..r
            })
        })
        .collect()
}
