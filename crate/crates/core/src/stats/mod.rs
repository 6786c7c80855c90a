//! Aggregation and reliability statistics.
//!
//! Scale opinions are aggregated with the geometric mean because the slider
//! is logarithmic: equal slider distances are equal scale ratios.

mod aggregate;
mod agreement;
mod bootstrap;
mod concavity;
mod correlation;
mod sensitivity;

pub use aggregate::{aggregate_mois, mois_record, opinions_by_image};
pub use agreement::{
    intergroup_agreement, intergroup_agreement_pooled, AgreementConfig, AgreementReport, Pooling,
    Spread,
};
pub use bootstrap::{bootstrap_ci, geometric_mean, percentile, BootstrapSpec};
pub use concavity::{check_concavity, concavity_violation_probability, Concavity, RatingPool};
pub use correlation::{average_ranks, mae, metric_report, pearson, plcc, rmse, srcc, MetricReport};
pub use sensitivity::{leverage, sensitivity_table, LeverageReport, SensitivityPair};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("value {0} is not a positive scale")]
    NonPositive(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("need at least {need} participants, got {got}")]
    InsufficientParticipants { need: usize, got: usize },
    #[error("fewer than two images are shared by both groups")]
    NoSharedImages,
    #[error("quality change must be non-zero")]
    ZeroQualityChange,
    #[error("scales must be strictly increasing")]
    Unsorted,
    #[error("rating pool {0} is empty")]
    EmptyPool(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// One participant's IIS judgment for one image in one batch repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub study_id: String,
    pub participant_id: String,
    pub image_id: String,
    pub batch_id: u32,
    pub repetition: u8,
    pub scale_value: f64,
    pub slider_position: u32,
    pub submitted_at: u64,
    pub duration_ms: u64,
    /// Annotation round of the (participant, batch); bumped on re-annotation.
    #[serde(default)]
    pub generation: u32,
}

/// Ground-truth IIS for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoisRecord {
    pub image_id: String,
    pub mois: f64,
    pub ci95: f64,
    pub n_opinions: usize,
}
