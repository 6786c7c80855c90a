//! Intrinsic image scale: resampling, weak-label generation, subjective study
//! protocol, statistics, and predictor evaluation.

pub mod corpus;
pub mod evalhub;
pub mod iis;
pub mod resample;
pub mod seed;
pub mod stats;
pub mod study;
pub mod tables;

pub use iis::{extrapolate_iis, IntrinsicScale, WeakLabelConfig};
pub use resample::{downscale, Image, KernelKind, ResampleSpec, ScaleFactor, S_LB};
