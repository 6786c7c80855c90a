//! Predictor-facing harness: splits, median-of-splits evaluation, weak-label
//! export, and zero-shot multi-scale IIS estimation over a quality oracle.

mod evaluate;
mod export;
mod multiscale;
mod splits;

pub use evaluate::{evaluate, EvalReport, PredictionTable};
pub use export::{export_wiisa_manifest, join_ground_truth, GroundTruthEntry, WeakLabelRecord, MANIFEST_FILE};
pub use multiscale::{
    predict_corpus, predict_from_curve, predict_multiscale, scale_grid, CommandOracle, FnOracle,
    OracleError, QualityCurve, QualityOracle, ScoresFileOracle,
};
pub use splits::{make_splits, Split, SplitSpec};

use thiserror::Error;

use crate::iis::IisError;
use crate::resample::ResampleError;
use crate::stats::StatsError;
use crate::tables::TableError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {need} images, got {got}")]
    TooFewImages { need: usize, got: usize },
    #[error("invalid split spec: {0}")]
    InvalidSpec(String),
    #[error("missing predictions for: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("missing ground truth for: {}", .0.join(", "))]
    MissingGroundTruth(Vec<String>),
    #[error("image {image_id}: {source}")]
    Oracle {
        image_id: String,
        source: OracleError,
    },
    #[error("image {image_id}: {detail}")]
    Image { image_id: String, detail: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Iis(#[from] IisError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
