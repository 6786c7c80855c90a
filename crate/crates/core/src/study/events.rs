use serde::{Deserialize, Serialize};

use super::{ParticipantStatus, StudyConfig, TrainingItem};
use crate::stats::Opinion;

/// Every state change of a study. State is the fold of these over the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    StudyCreated {
        study_id: String,
        config: StudyConfig,
        seed: u64,
        images: Vec<String>,
        batches: Vec<Vec<String>>,
        training_items: Vec<TrainingItem>,
        at: u64,
    },
    ParticipantRegistered {
        participant_id: String,
        /// True when the study has no training phase.
        qualified: bool,
        at: u64,
    },
    TrainingAnswered {
        participant_id: String,
        item_id: String,
        scale: f64,
        accepted: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_token: Option<String>,
        at: u64,
    },
    StatusChanged {
        participant_id: String,
        status: ParticipantStatus,
        at: u64,
    },
    AssignmentStarted {
        participant_id: String,
        batch_id: u32,
        generation: u32,
        repetition: u8,
        image_ids: Vec<String>,
        order_seed: u64,
        at: u64,
    },
    OpinionRecorded {
        opinion: Opinion,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_token: Option<String>,
    },
    AssignmentCompleted {
        participant_id: String,
        batch_id: u32,
        generation: u32,
        repetition: u8,
        at: u64,
    },
    GateEvaluated {
        participant_id: String,
        batch_id: u32,
        generation: u32,
        srcc: Option<f64>,
        passed: bool,
        at: u64,
    },
}
