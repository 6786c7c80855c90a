//! Weak-label export for training pipelines.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::CorpusManifest;
use crate::iis::{generate_weak_labels, IntrinsicScale, WeakLabelConfig};
use crate::resample::Image;
use crate::stats::MoisRecord;
use crate::tables::write_jsonl;

pub const MANIFEST_FILE: &str = "weak_labels.jsonl";
pub const DEFAULT_CROP: u32 = 1536;

/// An image with its aggregated IIS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub image_id: String,
    pub file_path: PathBuf,
    pub mois: f64,
}

/// One line of the weak-label manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLabelRecord {
    pub source_image_id: String,
    pub sampled_scale: f64,
    pub weak_iis: f64,
    pub output_image_ref: String,
    pub interpolation: String,
    pub seed: u64,
    pub delta: f64,
    pub n_wl: usize,
    /// Side of the center crop applied after downscaling.
    pub crop: u32,
}

/// Pairs each MOIS record with its corpus file. Every record must be known
/// to the corpus.
pub fn join_ground_truth(mois: &[MoisRecord], corpus: &CorpusManifest) -> Result<Vec<GroundTruthEntry>, EvalError> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(mois.len());
    for r in mois {
        match corpus.get(&r.image_id) {
            Some(e) => out.push(GroundTruthEntry {
                image_id: r.image_id.clone(),
                file_path: e.file_path.clone(),
                mois: r.mois,
            }),
            None => missing.push(r.image_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::Image {
            image_id: missing.join(", "),
            detail: "not in corpus".into(),
        });
    }
    Ok(out)
}

/// Writes `n_wl` weak images per entry into `out_dir` plus the manifest.
///
/// Each weak image is downscaled from the full original, then center-cropped
/// to `crop` (default 1536) or its own size if smaller. Records are ordered
/// by source id then index, independent of scheduling.
pub fn export_wiisa_manifest(
    entries: &[GroundTruthEntry],
    cfg: &WeakLabelConfig,
    crop: Option<u32>,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<WeakLabelRecord>, EvalError> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let crop = crop.unwrap_or(DEFAULT_CROP);
    let tag = cfg.interpolation.tag();
    let per_image: Vec<(String, Vec<WeakLabelRecord>)> = entries
        .par_iter()
        .map(|e| {
            let omega = IntrinsicScale::new(e.mois)?;
            let img = Image::open(&e.file_path, e.image_id.as_str())?;
            let samples = generate_weak_labels(&img, omega, cfg)?;
            let mut recs = Vec::with_capacity(samples.len());
            for s in samples {
                let side = crop.min(s.image.width()).min(s.image.height());
                s.image.center_crop(side).save_png(out_dir.join(&s.label.output_image_ref))?;
                recs.push(WeakLabelRecord {
                    source_image_id: s.label.source_image_id,
                    sampled_scale: s.label.sampled_scale,
                    weak_iis: s.label.weak_iis,
                    output_image_ref: s.label.output_image_ref,
                    interpolation: tag.clone(),
                    seed: cfg.rng_seed,
                    delta: cfg.delta,
                    n_wl: cfg.n_wl,
                    crop: side,
                });
            }
            Ok((e.image_id.clone(), recs))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let ordered: BTreeMap<String, Vec<WeakLabelRecord>> = per_image.into_iter().collect();
    let records: Vec<WeakLabelRecord> = ordered.into_values().flatten().collect();
    write_jsonl(out_dir.join(MANIFEST_FILE), &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::read_jsonl;

    #[test]
    fn export_writes_images_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("a.png");
        Image::filled("a", 40, 30, 3, 120).unwrap().save_png(&src).unwrap();
        let entries = vec![GroundTruthEntry {
            image_id: "a".into(),
            file_path: src,
            mois: 0.5,
        }];
        let out = dir.path().join("out");
        let cfg = WeakLabelConfig::with_seed(9);
        let recs = export_wiisa_manifest(&entries, &cfg, Some(16), &out).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert!(r.sampled_scale >= 0.65 && r.sampled_scale <= 1.0);
            assert!((r.weak_iis - 0.5 / r.sampled_scale).abs() < 1e-12);
            assert_eq!(r.crop, 16);
            let img = Image::open(out.join(&r.output_image_ref), "w").unwrap();
            assert_eq!((img.width(), img.height()), (16, 16));
        }
        let back: Vec<WeakLabelRecord> = read_jsonl(out.join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, recs);
        let again = export_wiisa_manifest(&entries, &cfg, Some(16), &out).unwrap();
        assert_eq!(again, recs);
    }
}
