//! Annotation protocol: training phase, randomized batches viewed twice,
//! an intra-rater reliability gate, and MOIS aggregation.
//!
//! A study is an event-sourced state machine. Commands validate against the
//! current [`StudyState`], append events to the log, then fold them into the
//! state. Reopening a study replays the snapshot and the log tail.

mod events;
mod log;
mod slider;
mod state;
mod store;

pub use events::Event;
pub use log::{EventLog, EventRecord};
pub use slider::SliderGrid;
pub use state::{
    Aggregation, AssignmentView, ExportBundle, GateRecord, NextStep, ParticipantProgress,
    StudyProgress, StudyState,
};
pub use store::{now_ms, OpinionSubmission, Study, StudyStore, TrainingOutcome};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::StatsError;

pub const HOUR_MS: u64 = 3_600_000;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("corrupt store {path}: {detail}")]
    Corrupt { path: String, detail: String },
    #[error("invalid study config: {0}")]
    Config(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate image id {0}")]
    DuplicateImage(String),
    #[error("study {0} already exists")]
    AlreadyExists(String),
    #[error("unknown study {0}")]
    UnknownStudy(String),
    #[error("unknown participant {0}")]
    UnknownParticipant(String),
    #[error("unknown training item {0}")]
    UnknownTrainingItem(String),
    #[error("unknown batch {0}")]
    UnknownBatch(u32),
    #[error("participant {0} is not in the training phase")]
    NotInTraining(String),
    #[error("participant {0} is not qualified for this task")]
    NotQualified(String),
    #[error("out of order: {0}")]
    OutOfOrder(String),
    #[error("image {image} is not part of batch {batch_id}")]
    ImageNotInAssignment { image: String, batch_id: u32 },
    #[error("duplicate: image {image} already annotated in repetition {repetition}")]
    Duplicate { image: String, repetition: u8 },
    #[error("slider position {position} outside 0..{steps}")]
    SliderPosition { position: u32, steps: u32 },
    #[error("batch {batch_id} of {participant} does not have both repetitions complete")]
    IncompleteRepetitions { participant: String, batch_id: u32 },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn default_batch_size() -> usize {
    90
}
fn default_repetitions() -> u8 {
    2
}
fn default_gap() -> u64 {
    48 * HOUR_MS
}
fn default_threshold() -> f64 {
    0.5
}
fn default_target() -> usize {
    20
}
fn default_steps() -> u32 {
    100
}
fn default_s_lb() -> f64 {
    crate::resample::S_LB
}
fn default_resamples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: u8,
    /// Minimum wall-clock time between completing repetition 1 of a batch
    /// and starting repetition 2.
    #[serde(default = "default_gap")]
    pub min_repetition_gap_ms: u64,
    #[serde(default = "default_threshold")]
    pub reliability_threshold: f64,
    #[serde(default = "default_target")]
    pub opinions_per_image_target: usize,
    #[serde(default = "default_steps")]
    pub slider_steps: u32,
    #[serde(default = "default_s_lb")]
    pub s_lb: f64,
    /// Accepted training items needed to qualify; `None` means all of them.
    #[serde(default)]
    pub training_pass_count: Option<usize>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            batch_size: default_batch_size(),
            repetitions: default_repetitions(),
            min_repetition_gap_ms: default_gap(),
            reliability_threshold: default_threshold(),
            opinions_per_image_target: default_target(),
            slider_steps: default_steps(),
            s_lb: default_s_lb(),
            training_pass_count: None,
            bootstrap_resamples: default_resamples(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        if self.batch_size < 1 {
            return Err(StudyError::Config("batch_size must be >= 1".into()));
        }
        if self.repetitions != 2 {
            return Err(StudyError::Config("the protocol uses exactly 2 repetitions".into()));
        }
        if !(0.0..=1.0).contains(&self.reliability_threshold) {
            return Err(StudyError::Config("reliability_threshold must be in [0, 1]".into()));
        }
        if self.bootstrap_resamples < 1 {
            return Err(StudyError::Config("bootstrap_resamples must be >= 1".into()));
        }
        SliderGrid::new(self.slider_steps, self.s_lb)?;
        Ok(())
    }

    pub fn slider(&self) -> SliderGrid {
        SliderGrid {
            steps: self.slider_steps,
            s_lb: self.s_lb,
        }
    }
}

/// `s_lb ^ ((steps - 1 - position) / (steps - 1))` for the config's slider.
pub fn slider_to_scale(position: u32, cfg: &StudyConfig) -> Result<f64, StudyError> {
    cfg.slider().scale(position)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantStatus {
    InTraining,
    Qualified,
    Active,
    /// Failed a reliability gate; only re-annotation work is offered until
    /// a replacement passes.
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: String,
    pub status: ParticipantStatus,
    pub assigned_batches: Vec<u32>,
    #[serde(default)]
    pub training_accepted: BTreeSet<String>,
    /// Current annotation generation per batch (absent means 0).
    #[serde(default)]
    pub generations: BTreeMap<u32, u32>,
}

impl Participant {
    pub fn generation(&self, batch_id: u32) -> u32 {
        self.generations.get(&batch_id).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingItem {
    pub item_id: String,
    pub image_id: String,
    /// Accepted IIS range `[low, high]`.
    pub accepted_iis_range: (f64, f64),
    pub hint_text: String,
}

impl TrainingItem {
    pub fn validate(&self, s_lb: f64) -> Result<(), StudyError> {
        let (lo, hi) = self.accepted_iis_range;
        if !(lo <= hi && lo >= s_lb && hi <= 1.0) {
            return Err(StudyError::Config(format!(
                "training item {} has invalid range [{lo}, {hi}]",
                self.item_id
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, scale: f64) -> bool {
        let (lo, hi) = self.accepted_iis_range;
        (lo..=hi).contains(&scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentState {
    Pending,
    InProgress,
    Complete,
    ReannotationRequired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAssignment {
    pub participant_id: String,
    pub batch_id: u32,
    pub generation: u32,
    pub repetition: u8,
    /// Presentation order, a permutation of the batch.
    pub image_ids: Vec<String>,
    pub order_seed: u64,
    pub state: AssignmentState,
    pub started_at: u64,
    pub completed_at: Option<u64>,
    #[serde(default)]
    pub annotated: BTreeSet<String>,
}

/// Splits `n` images into `ceil(n / batch_size)` batches; the last may be short.
pub fn batch_count(n: usize, batch_size: usize) -> usize {
    n.div_ceil(batch_size)
}
