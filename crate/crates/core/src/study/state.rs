use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    AssignmentState, BatchAssignment, Event, Participant, ParticipantStatus, StudyConfig,
    StudyError, TrainingItem,
};
use crate::stats::{mois_record, srcc, MoisRecord, Opinion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub participant_id: String,
    pub batch_id: u32,
    pub generation: u32,
    pub srcc: Option<f64>,
    pub passed: bool,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub(crate) enum TokenOutcome {
    Opinion { index: usize },
    Training { item_id: String, accepted: bool },
}

/// Folded state of one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyState {
    pub study_id: String,
    pub config: StudyConfig,
    pub seed: u64,
    pub created_at: u64,
    pub images: Vec<String>,
    pub batches: Vec<Vec<String>>,
    pub training_items: Vec<TrainingItem>,
    pub participants: BTreeMap<String, Participant>,
    pub assignments: Vec<BatchAssignment>,
    /// Every opinion ever recorded, superseded ones included.
    pub opinions: Vec<Opinion>,
    pub gates: Vec<GateRecord>,
    pub(crate) tokens: BTreeMap<String, TokenOutcome>,
    pub last_seq: u64,
}

/// What a participant should do next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextStep {
    Training { items: Vec<TrainingItem> },
    Assignment(AssignmentView),
    Wait { available_at: u64 },
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentView {
    pub batch_id: u32,
    pub generation: u32,
    pub repetition: u8,
    pub image_ids: Vec<String>,
    pub remaining: Vec<String>,
}

impl From<&BatchAssignment> for AssignmentView {
    fn from(a: &BatchAssignment) -> Self {
        Self {
            batch_id: a.batch_id,
            generation: a.generation,
            repetition: a.repetition,
            image_ids: a.image_ids.clone(),
            remaining: a
                .image_ids
                .iter()
                .filter(|i| !a.annotated.contains(*i))
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProgress {
    pub participant_id: String,
    pub status: ParticipantStatus,
    pub batches_total: usize,
    pub repetitions_complete: usize,
    pub opinions_submitted: usize,
    pub gates_passed: usize,
    pub gates_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyProgress {
    pub study_id: String,
    pub images: usize,
    pub batches: usize,
    pub participants: usize,
    pub opinions: usize,
    pub gates_passed: usize,
    pub gates_failed: usize,
}

/// Aggregated labels, plus images with no valid opinion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    pub records: Vec<MoisRecord>,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub study_id: String,
    pub config: StudyConfig,
    pub seed: u64,
    pub images: Vec<String>,
    pub batches: Vec<Vec<String>>,
    pub opinions: Vec<Opinion>,
    pub mois: Aggregation,
    pub gates: Vec<GateRecord>,
}

impl StudyState {
    pub(crate) fn from_created(event: &Event) -> Result<Self, StudyError> {
        match event {
            Event::StudyCreated {
                study_id,
                config,
                seed,
                images,
                batches,
                training_items,
                at,
            } => Ok(Self {
                study_id: study_id.clone(),
                config: config.clone(),
                seed: *seed,
                created_at: *at,
                images: images.clone(),
                batches: batches.clone(),
                training_items: training_items.clone(),
                participants: BTreeMap::new(),
                assignments: Vec::new(),
                opinions: Vec::new(),
                gates: Vec::new(),
                tokens: BTreeMap::new(),
                last_seq: 1,
            }),
            other => Err(StudyError::Corrupt {
                path: String::new(),
                detail: format!("log does not start with study creation: {other:?}"),
            }),
        }
    }

    pub(crate) fn assignment_index(
        &self,
        participant: &str,
        batch_id: u32,
        generation: u32,
        repetition: u8,
    ) -> Option<usize> {
        self.assignments.iter().position(|a| {
            a.participant_id == participant
                && a.batch_id == batch_id
                && a.generation == generation
                && a.repetition == repetition
        })
    }

    pub fn assignment(
        &self,
        participant: &str,
        batch_id: u32,
        generation: u32,
        repetition: u8,
    ) -> Option<&BatchAssignment> {
        self.assignment_index(participant, batch_id, generation, repetition)
            .map(|i| &self.assignments[i])
    }

    pub fn in_progress(&self, participant: &str) -> Option<&BatchAssignment> {
        self.assignments
            .iter()
            .find(|a| a.participant_id == participant && a.state == AssignmentState::InProgress)
    }

    /// Folds one event into the state. Events are trusted: they were
    /// validated before being appended.
    pub(crate) fn apply(&mut self, seq: u64, event: &Event) {
        self.last_seq = seq;
        match event {
            Event::StudyCreated { .. } => {}
            Event::ParticipantRegistered {
                participant_id,
                qualified,
                ..
            } => {
                self.participants.entry(participant_id.clone()).or_insert_with(|| Participant {
                    participant_id: participant_id.clone(),
                    status: if *qualified {
                        ParticipantStatus::Qualified
                    } else {
                        ParticipantStatus::InTraining
                    },
                    assigned_batches: Vec::new(),
                    training_accepted: BTreeSet::new(),
                    generations: BTreeMap::new(),
                });
            }
            Event::TrainingAnswered {
                participant_id,
                item_id,
                accepted,
                request_token,
                ..
            } => {
                if let Some(p) = self.participants.get_mut(participant_id) {
                    if *accepted {
                        p.training_accepted.insert(item_id.clone());
                    }
                }
                if let Some(t) = request_token {
                    self.tokens.insert(
                        t.clone(),
                        TokenOutcome::Training {
                            item_id: item_id.clone(),
                            accepted: *accepted,
                        },
                    );
                }
            }
            Event::StatusChanged {
                participant_id,
                status,
                ..
            } => {
                if let Some(p) = self.participants.get_mut(participant_id) {
                    p.status = *status;
                }
            }
            Event::AssignmentStarted {
                participant_id,
                batch_id,
                generation,
                repetition,
                image_ids,
                order_seed,
                at,
            } => {
                if let Some(p) = self.participants.get_mut(participant_id) {
                    if !p.assigned_batches.contains(batch_id) {
                        p.assigned_batches.push(*batch_id);
                    }
                }
                self.assignments.push(BatchAssignment {
                    participant_id: participant_id.clone(),
                    batch_id: *batch_id,
                    generation: *generation,
                    repetition: *repetition,
                    image_ids: image_ids.clone(),
                    order_seed: *order_seed,
                    state: AssignmentState::InProgress,
                    started_at: *at,
                    completed_at: None,
                    annotated: BTreeSet::new(),
                });
            }
            Event::OpinionRecorded {
                opinion,
                request_token,
            } => {
                if let Some(i) = self.assignment_index(
                    &opinion.participant_id,
                    opinion.batch_id,
                    opinion.generation,
                    opinion.repetition,
                ) {
                    self.assignments[i].annotated.insert(opinion.image_id.clone());
                }
                if let Some(t) = request_token {
                    self.tokens.insert(
                        t.clone(),
                        TokenOutcome::Opinion {
                            index: self.opinions.len(),
                        },
                    );
                }
                self.opinions.push(opinion.clone());
            }
            Event::AssignmentCompleted {
                participant_id,
                batch_id,
                generation,
                repetition,
                at,
            } => {
                if let Some(i) =
                    self.assignment_index(participant_id, *batch_id, *generation, *repetition)
                {
                    self.assignments[i].state = AssignmentState::Complete;
                    self.assignments[i].completed_at = Some(*at);
                }
            }
            Event::GateEvaluated {
                participant_id,
                batch_id,
                generation,
                srcc,
                passed,
                at,
            } => {
                self.gates.push(GateRecord {
                    participant_id: participant_id.clone(),
                    batch_id: *batch_id,
                    generation: *generation,
                    srcc: *srcc,
                    passed: *passed,
                    at: *at,
                });
                if !passed {
                    for rep in 1..=2 {
                        if let Some(i) =
                            self.assignment_index(participant_id, *batch_id, *generation, rep)
                        {
                            self.assignments[i].state = AssignmentState::ReannotationRequired;
                        }
                    }
                    if let Some(p) = self.participants.get_mut(participant_id) {
                        p.generations.insert(*batch_id, generation + 1);
                    }
                }
            }
        }
    }

    /// Repetition-1 and repetition-2 scale vectors of one generation, aligned
    /// by the batch's image order.
    pub fn repetition_vectors(
        &self,
        participant: &str,
        batch_id: u32,
        generation: u32,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut by_rep: [BTreeMap<&str, f64>; 2] = [BTreeMap::new(), BTreeMap::new()];
        for o in &self.opinions {
            if o.participant_id == participant
                && o.batch_id == batch_id
                && o.generation == generation
                && (1..=2).contains(&o.repetition)
            {
                by_rep[(o.repetition - 1) as usize].insert(o.image_id.as_str(), o.scale_value);
            }
        }
        let batch = &self.batches[batch_id as usize];
        let mut r1 = Vec::with_capacity(batch.len());
        let mut r2 = Vec::with_capacity(batch.len());
        for img in batch {
            if let (Some(a), Some(b)) = (by_rep[0].get(img.as_str()), by_rep[1].get(img.as_str())) {
                r1.push(*a);
                r2.push(*b);
            }
        }
        (r1, r2)
    }

    /// SRCC between the two repetitions and the pass decision.
    ///
    /// An undefined SRCC (a constant repetition) does not pass.
    pub fn compute_gate(
        &self,
        participant: &str,
        batch_id: u32,
        generation: u32,
    ) -> Result<(Option<f64>, bool), StudyError> {
        let complete = |rep| {
            self.assignment(participant, batch_id, generation, rep)
                .is_some_and(|a| a.completed_at.is_some())
        };
        if !(complete(1) && complete(2)) {
            return Err(StudyError::IncompleteRepetitions {
                participant: participant.to_string(),
                batch_id,
            });
        }
        let (r1, r2) = self.repetition_vectors(participant, batch_id, generation);
        let value = if r1.len() >= 2 { srcc(&r1, &r2)? } else { None };
        let passed = value.is_some_and(|v| v >= self.config.reliability_threshold);
        Ok((value, passed))
    }

    pub fn gate(&self, participant: &str, batch_id: u32, generation: u32) -> Option<&GateRecord> {
        self.gates.iter().rev().find(|g| {
            g.participant_id == participant && g.batch_id == batch_id && g.generation == generation
        })
    }

    /// Opinions that count toward the MOIS: for each (participant, batch),
    /// both repetitions of the latest generation that passed its gate.
    pub fn valid_opinions(&self) -> Vec<&Opinion> {
        let mut passing: BTreeMap<(&str, u32), u32> = BTreeMap::new();
        for g in self.gates.iter().filter(|g| g.passed) {
            let e = passing.entry((g.participant_id.as_str(), g.batch_id)).or_insert(g.generation);
            *e = (*e).max(g.generation);
        }
        self.opinions
            .iter()
            .filter(|o| {
                passing.get(&(o.participant_id.as_str(), o.batch_id)) == Some(&o.generation)
            })
            .collect()
    }

    /// Geometric-mean MOIS with a bootstrap half-width per image.
    pub fn aggregate(&self) -> Result<Aggregation, StudyError> {
        let mut per_image: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for o in self.valid_opinions() {
            per_image.entry(o.image_id.as_str()).or_default().push(o.scale_value);
        }
        let mut records = Vec::new();
        let mut missing = Vec::new();
        for img in &self.images {
            match per_image.get(img.as_str()) {
                Some(values) if !values.is_empty() => {
                    records.push(mois_record(img, values, self.seed, self.config.bootstrap_resamples)?);
                }
                _ => missing.push(img.clone()),
            }
        }
        Ok(Aggregation { records, missing })
    }

    pub fn participant_progress(&self, participant: &str) -> Result<ParticipantProgress, StudyError> {
        let p = self
            .participants
            .get(participant)
            .ok_or_else(|| StudyError::UnknownParticipant(participant.to_string()))?;
        let gates: Vec<&GateRecord> =
            self.gates.iter().filter(|g| g.participant_id == participant).collect();
        Ok(ParticipantProgress {
            participant_id: participant.to_string(),
            status: p.status,
            batches_total: self.batches.len(),
            repetitions_complete: self
                .assignments
                .iter()
                .filter(|a| a.participant_id == participant && a.completed_at.is_some())
                .count(),
            opinions_submitted: self
                .opinions
                .iter()
                .filter(|o| o.participant_id == participant)
                .count(),
            gates_passed: gates.iter().filter(|g| g.passed).count(),
            gates_failed: gates.iter().filter(|g| !g.passed).count(),
        })
    }

    pub fn progress(&self) -> StudyProgress {
        StudyProgress {
            study_id: self.study_id.clone(),
            images: self.images.len(),
            batches: self.batches.len(),
            participants: self.participants.len(),
            opinions: self.opinions.len(),
            gates_passed: self.gates.iter().filter(|g| g.passed).count(),
            gates_failed: self.gates.iter().filter(|g| !g.passed).count(),
        }
    }

    pub fn export(&self) -> Result<ExportBundle, StudyError> {
        Ok(ExportBundle {
            study_id: self.study_id.clone(),
            config: self.config.clone(),
            seed: self.seed,
            images: self.images.clone(),
            batches: self.batches.clone(),
            opinions: self.opinions.clone(),
            mois: self.aggregate()?,
            gates: self.gates.clone(),
        })
    }
}
