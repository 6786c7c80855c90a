//! Inter-group agreement between disjoint participant groups.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{geometric_mean, srcc, Opinion, StatsError};
use crate::seed::derived_rng;

/// How a group's opinions on one image are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// For scale opinions (MOIS).
    #[default]
    Geometric,
    /// For quality ratings (MOS).
    Arithmetic,
}

impl Pooling {
    fn pool(self, values: &[f64]) -> Result<f64, StatsError> {
        match self {
            Pooling::Geometric => geometric_mean(values),
            Pooling::Arithmetic => {
                if values.is_empty() {
                    Err(StatsError::Empty)
                } else {
                    Ok(values.iter().sum::<f64>() / values.len() as f64)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementConfig {
    pub group_size: usize,
    pub n_pairs: usize,
    pub seed: u64,
    #[serde(default)]
    pub pooling: Pooling,
}

impl AgreementConfig {
    pub fn new(group_size: usize, seed: u64) -> Self {
        Self {
            group_size,
            n_pairs: 200,
            seed,
            pooling: Pooling::Geometric,
        }
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub sd: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Spread {
        if values.is_empty() {
            return Spread {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Spread { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub group_size: usize,
    pub n_pairs: usize,
    pub srcc: Spread,
    pub rmsd: Spread,
    /// Pairs whose SRCC was undefined (a constant group vector); excluded
    /// from the SRCC spread but kept in the RMSD spread.
    pub undefined_srcc_pairs: usize,
}

struct PairResult {
    srcc: Option<f64>,
    rmsd: f64,
}

fn compare(a: &[f64], b: &[f64]) -> Result<PairResult, StatsError> {
    if a.len() < 2 {
        return Err(StatsError::NoSharedImages);
    }
    let rmsd = (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    Ok(PairResult {
        srcc: srcc(a, b)?,
        rmsd,
    })
}

fn summarize(cfg: &AgreementConfig, pairs: Vec<PairResult>) -> AgreementReport {
    let srccs: Vec<f64> = pairs.iter().filter_map(|p| p.srcc).collect();
    let rmsds: Vec<f64> = pairs.iter().map(|p| p.rmsd).collect();
    AgreementReport {
        group_size: cfg.group_size,
        n_pairs: pairs.len(),
        undefined_srcc_pairs: pairs.len() - srccs.len(),
        srcc: Spread::of(&srccs),
        rmsd: Spread::of(&rmsds),
    }
}

/// Agreement between pairs of disjoint participant groups.
///
/// Each pair draws `2 * group_size` distinct participants; the first half
/// forms one group. Per image, each group's opinions (all repetitions) are
/// pooled, and the two per-image vectors are compared by SRCC and RMSD on the
/// raw values. Images lacking opinions from either group are skipped.
pub fn intergroup_agreement(
    opinions: &[Opinion],
    cfg: &AgreementConfig,
) -> Result<AgreementReport, StatsError> {
    if cfg.group_size == 0 || cfg.n_pairs == 0 {
        return Err(StatsError::Invalid("group_size and n_pairs must be >= 1".into()));
    }
    let participants: Vec<&str> = opinions
        .iter()
        .map(|o| o.participant_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let need = 2 * cfg.group_size;
    if participants.len() < need {
        return Err(StatsError::InsufficientParticipants {
            need,
            got: participants.len(),
        });
    }
    let images: Vec<&str> = opinions
        .iter()
        .map(|o| o.image_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pidx: BTreeMap<&str, usize> = participants.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let iidx: BTreeMap<&str, usize> = images.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    // table[participant][image] = opinions
    let mut table = vec![vec![Vec::<f64>::new(); images.len()]; participants.len()];
    for o in opinions {
        table[pidx[o.participant_id.as_str()]][iidx[o.image_id.as_str()]].push(o.scale_value);
    }

    let pairs = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = derived_rng(cfg.seed, &["intergroup", &k.to_string()]);
            let chosen = sample(&mut rng, participants.len(), need).into_vec();
            let (ga, gb) = chosen.split_at(cfg.group_size);
            let mut a = Vec::with_capacity(images.len());
            let mut b = Vec::with_capacity(images.len());
            let mut buf_a = Vec::new();
            let mut buf_b = Vec::new();
            for img in 0..images.len() {
                buf_a.clear();
                buf_b.clear();
                ga.iter().for_each(|&p| buf_a.extend_from_slice(&table[p][img]));
                gb.iter().for_each(|&p| buf_b.extend_from_slice(&table[p][img]));
                if buf_a.is_empty() || buf_b.is_empty() {
                    continue;
                }
                a.push(cfg.pooling.pool(&buf_a)?);
                b.push(cfg.pooling.pool(&buf_b)?);
            }
            compare(&a, &b)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(cfg, pairs))
}

/// Agreement when participant identity is unavailable: for each image,
/// `2 * group_size` opinions are drawn without replacement and split into
/// two groups. Images with too few opinions are skipped.
pub fn intergroup_agreement_pooled(
    opinions_by_image: &BTreeMap<String, Vec<f64>>,
    cfg: &AgreementConfig,
) -> Result<AgreementReport, StatsError> {
    if cfg.group_size == 0 || cfg.n_pairs == 0 {
        return Err(StatsError::Invalid("group_size and n_pairs must be >= 1".into()));
    }
    let need = 2 * cfg.group_size;
    let eligible: Vec<&Vec<f64>> = opinions_by_image.values().filter(|v| v.len() >= need).collect();
    let pairs = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = derived_rng(cfg.seed, &["intergroup-pooled", &k.to_string()]);
            let mut a = Vec::with_capacity(eligible.len());
            let mut b = Vec::with_capacity(eligible.len());
            for ops in &eligible {
                let chosen = sample(&mut rng, ops.len(), need).into_vec();
                let (ia, ib) = chosen.split_at(cfg.group_size);
                let va: Vec<f64> = ia.iter().map(|&i| ops[i]).collect();
                let vb: Vec<f64> = ib.iter().map(|&i| ops[i]).collect();
                a.push(cfg.pooling.pool(&va)?);
                b.push(cfg.pooling.pool(&vb)?);
            }
            compare(&a, &b)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(cfg, pairs))
}
