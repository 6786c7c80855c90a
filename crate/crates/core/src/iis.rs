//! Intrinsic-scale arithmetic and weak-label generation.
//!
//! The intrinsic scale of an image is the largest scale at which it reaches
//! its highest quality. Under the assumption that quality rises up to that
//! scale and falls after it, the IIS of a downscaled copy `I^s` follows from
//! the IIS `omega` of the original:
//!
//! ```text
//! iis(I^s) = 1          if s <= omega
//!          = omega / s  if s >  omega
//! ```
//!
//! Weak labels are produced by sampling scales in `[max(omega, delta), 1]`,
//! so only the second branch is ever used.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resample::{downscale, Image, ResampleError, ResampleSpec, ScaleFactor, S_LB};
use crate::seed::{derive_seed, rng_from_seed, StudyRng};

#[derive(Debug, Error)]
pub enum IisError {
    #[error("intrinsic scale {0} outside [{S_LB}, 1]")]
    OutOfRange(f64),
    #[error("scale {0} outside [{S_LB}, 1]")]
    Scale(f64),
    #[error("invalid weak-label config: {0}")]
    Config(String),
    #[error(transparent)]
    Resample(#[from] ResampleError),
}

/// An intrinsic scale in `[S_LB, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct IntrinsicScale(f64);

impl IntrinsicScale {
    pub const ONE: IntrinsicScale = IntrinsicScale(1.0);

    pub fn new(value: f64) -> Result<Self, IisError> {
        if (S_LB..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(IisError::OutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for IntrinsicScale {
    type Error = IisError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<IntrinsicScale> for f64 {
    fn from(v: IntrinsicScale) -> f64 {
        v.0
    }
}

/// IIS of the image obtained by downscaling an image with IIS `omega` to `s`.
pub fn extrapolate_iis(omega: IntrinsicScale, s: f64) -> Result<IntrinsicScale, IisError> {
    if !(S_LB..=1.0).contains(&s) {
        return Err(IisError::Scale(s));
    }
    let omega = omega.value();
    if s <= omega {
        Ok(IntrinsicScale::ONE)
    } else {
        // omega < s keeps the ratio inside (omega, 1).
        Ok(IntrinsicScale(omega / s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLabelConfig {
    pub n_wl: usize,
    pub delta: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub interpolation: ResampleSpec,
}

impl Default for WeakLabelConfig {
    fn default() -> Self {
        Self {
            n_wl: 2,
            delta: 0.65,
            rng_seed: 0,
            interpolation: ResampleSpec::default(),
        }
    }
}

impl WeakLabelConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IisError> {
        if self.n_wl < 1 {
            return Err(IisError::Config("n_wl must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(IisError::Config(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        self.interpolation.validate()?;
        Ok(())
    }
}

const SCALE_QUANTUM: f64 = 1e-4;
const SCALE_STEPS: f64 = 1e4;

/// Draws one scale uniformly from `[lo, 1]`, kept to four decimals and never
/// below `lo`.
fn draw_scale(lo: f64, rng: &mut StudyRng) -> f64 {
    let raw = if lo >= 1.0 { 1.0 } else { rng.random_range(lo..=1.0) };
    let mut q = (raw / SCALE_QUANTUM).round() / SCALE_STEPS;
    if q < lo {
        q = (lo / SCALE_QUANTUM).ceil() / SCALE_STEPS;
        if q < lo {
            q = lo;
        }
    }
    q.min(1.0)
}

/// `n_wl` scales drawn independently and uniformly from `[max(omega, delta), 1]`
/// using `cfg.rng_seed`.
pub fn sample_weak_scales(omega: IntrinsicScale, cfg: &WeakLabelConfig) -> Vec<ScaleFactor> {
    let mut rng = rng_from_seed(cfg.rng_seed);
    sample_weak_scales_with(omega, cfg, &mut rng)
}

pub fn sample_weak_scales_with(
    omega: IntrinsicScale,
    cfg: &WeakLabelConfig,
    rng: &mut StudyRng,
) -> Vec<ScaleFactor> {
    let lo = omega.value().max(cfg.delta);
    (0..cfg.n_wl)
        .map(|_| ScaleFactor::new(draw_scale(lo, rng)).expect("scale within (0, 1]"))
        .collect()
}

/// One weakly labelled pair, described without its pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLabel {
    pub source_image_id: String,
    pub sampled_scale: f64,
    pub weak_iis: f64,
    pub output_image_ref: String,
}

#[derive(Debug, Clone)]
pub struct WeakSample {
    pub label: WeakLabel,
    pub image: Image,
}

/// Name given to the `index`-th weak image of `source_id`.
pub fn weak_image_ref(source_id: &str, index: usize) -> String {
    format!("{source_id}__wl{index}.png")
}

/// Seed of the per-image stream used by [`generate_weak_labels`].
pub fn image_stream_seed(seed: u64, image_id: &str) -> u64 {
    derive_seed(seed, &["wiisa", image_id])
}

/// Downscales `image` to each sampled scale and labels it with `omega / s`.
///
/// The random stream is derived from `(cfg.rng_seed, image id)`, so results
/// do not depend on the order images are processed in.
pub fn generate_weak_labels(
    image: &Image,
    omega: IntrinsicScale,
    cfg: &WeakLabelConfig,
) -> Result<Vec<WeakSample>, IisError> {
    let mut rng = rng_from_seed(image_stream_seed(cfg.rng_seed, image.id()));
    generate_with_rng(image, omega, cfg, &mut rng)
}

fn generate_with_rng(
    image: &Image,
    omega: IntrinsicScale,
    cfg: &WeakLabelConfig,
    rng: &mut StudyRng,
) -> Result<Vec<WeakSample>, IisError> {
    cfg.validate()?;
    let scales = sample_weak_scales_with(omega, cfg, rng);
    scales
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let weak = extrapolate_iis(omega, s.value())?;
            debug_assert!(weak.value() >= omega.value());
            let resized = downscale(image, s, &cfg.interpolation)?;
            let reference = weak_image_ref(image.id(), i);
            Ok(WeakSample {
                label: WeakLabel {
                    source_image_id: image.id().to_string(),
                    sampled_scale: s.value(),
                    weak_iis: weak.value(),
                    output_image_ref: reference.clone(),
                },
                image: resized.with_id(reference),
            })
        })
        .collect()
}

/// A training sample after augmentation.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub image: Image,
    pub iis: f64,
    pub weak: bool,
}

/// Extends a batch of `B` ground-truth pairs with `B * n_wl` weak pairs.
///
/// `step` selects a fresh random stream per training step.
pub fn augment_batch(
    batch: &[(Image, IntrinsicScale)],
    cfg: &WeakLabelConfig,
    step: u64,
) -> Result<Vec<TrainingSample>, IisError> {
    let mut out: Vec<TrainingSample> = batch
        .iter()
        .map(|(img, omega)| TrainingSample {
            image: img.clone(),
            iis: omega.value(),
            weak: false,
        })
        .collect();
    for (img, omega) in batch {
        let seed = derive_seed(cfg.rng_seed, &["batch", &step.to_string(), img.id()]);
        let mut rng = rng_from_seed(seed);
        for sample in generate_with_rng(img, *omega, cfg, &mut rng)? {
            out.push(TrainingSample {
                image: sample.image,
                iis: sample.label.weak_iis,
                weak: true,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iis(v: f64) -> IntrinsicScale {
        IntrinsicScale::new(v).unwrap()
    }

    #[test]
    fn both_branches() {
        assert_eq!(extrapolate_iis(iis(0.3), 0.2).unwrap().value(), 1.0);
        assert!((extrapolate_iis(iis(0.3), 0.6).unwrap().value() - 0.5).abs() < 1e-15);
        assert_eq!(extrapolate_iis(iis(0.347), 1.0).unwrap().value(), 0.347);
        assert_eq!(extrapolate_iis(iis(0.3), 0.3).unwrap().value(), 1.0);
    }

    #[test]
    fn scale_bounds_enforced() {
        assert!(matches!(extrapolate_iis(iis(0.3), 0.04), Err(IisError::Scale(_))));
        assert!(matches!(extrapolate_iis(iis(0.3), 1.2), Err(IisError::Scale(_))));
        assert!(IntrinsicScale::new(0.01).is_err());
    }

    #[test]
    fn sampled_scales_respect_lower_bound() {
        let cfg = WeakLabelConfig { n_wl: 50, ..WeakLabelConfig::with_seed(3) };
        assert!(sample_weak_scales(iis(0.3), &cfg)
            .iter()
            .all(|s| (0.65..=1.0).contains(&s.value())));
        assert!(sample_weak_scales(iis(0.8), &cfg)
            .iter()
            .all(|s| (0.8..=1.0).contains(&s.value())));
    }

    #[test]
    fn seeded_sampling_repeats() {
        let cfg = WeakLabelConfig::with_seed(42);
        let a = sample_weak_scales(iis(0.3), &cfg);
        let b = sample_weak_scales(iis(0.3), &cfg);
        assert_eq!(a.len(), 2);
        assert_eq!(a, b);
    }

    #[test]
    fn pristine_image_keeps_label_one() {
        let img = Image::filled("p", 12, 12, 1, 9).unwrap();
        let labels = generate_weak_labels(&img, IntrinsicScale::ONE, &WeakLabelConfig::with_seed(1)).unwrap();
        assert!(labels.iter().all(|w| w.label.weak_iis == 1.0 && w.label.sampled_scale == 1.0));
    }

    #[test]
    fn weak_label_arithmetic() {
        // Fixed scales through the labelling path.
        let w = extrapolate_iis(iis(0.5), 0.65).unwrap().value();
        assert!((w - 0.769_230_769_230_769_2).abs() < 1e-12);
        assert_eq!(extrapolate_iis(iis(0.5), 1.0).unwrap().value(), 0.5);
    }

    #[test]
    fn batch_of_eight_yields_twenty_four() {
        let batch: Vec<_> = (0..8)
            .map(|i| (Image::filled(format!("b{i}"), 20, 20, 3, 50).unwrap(), iis(0.2 + 0.1 * i as f64)))
            .collect();
        let out = augment_batch(&batch, &WeakLabelConfig::with_seed(5), 0).unwrap();
        assert_eq!(out.len(), 24);
        assert_eq!(out.iter().filter(|s| s.weak).count(), 16);
    }

    #[test]
    fn bad_config_rejected() {
        let img = Image::filled("p", 4, 4, 1, 9).unwrap();
        let cfg = WeakLabelConfig { delta: 1.0, ..WeakLabelConfig::default() };
        assert!(matches!(generate_weak_labels(&img, iis(0.5), &cfg), Err(IisError::Config(_))));
        let cfg = WeakLabelConfig { n_wl: 0, ..WeakLabelConfig::default() };
        assert!(generate_weak_labels(&img, iis(0.5), &cfg).is_err());
    }
}
