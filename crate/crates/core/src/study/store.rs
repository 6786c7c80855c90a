use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::log::write_atomic;
use super::state::TokenOutcome;
use super::{
    AssignmentState, Event, EventLog, NextStep, ParticipantStatus, StudyConfig, StudyError,
    StudyState, TrainingItem,
};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::Opinion;

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

const EVENTS_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";
const SNAPSHOT_EVERY: u64 = 500;

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: StudyState,
}

/// A directory of studies, one subdirectory each.
#[derive(Debug, Clone)]
pub struct StudyStore {
    root: PathBuf,
}

impl StudyStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn study_dir(&self, study_id: &str) -> PathBuf {
        self.root.join(study_id)
    }

    pub fn list(&self) -> Result<Vec<String>, StudyError> {
        if !self.root.exists() {
            return Ok(Vec::new());
        }
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if entry.path().join(EVENTS_FILE).exists() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Partitions the corpus into randomly ordered batches and persists the
    /// new study. The id is derived from the corpus and seed.
    pub fn create(
        &self,
        image_ids: &[String],
        training_items: Vec<TrainingItem>,
        config: StudyConfig,
        seed: u64,
        now: u64,
    ) -> Result<Study, StudyError> {
        config.validate()?;
        if image_ids.is_empty() {
            return Err(StudyError::EmptyCorpus);
        }
        let mut seen = BTreeSet::new();
        for id in image_ids {
            if !seen.insert(id.as_str()) {
                return Err(StudyError::DuplicateImage(id.clone()));
            }
        }
        for item in &training_items {
            item.validate(config.s_lb)?;
        }
        let labels: Vec<&str> = image_ids.iter().map(String::as_str).collect();
        let study_id = format!("study-{:016x}", derive_seed(seed, &labels));
        let dir = self.study_dir(&study_id);
        if dir.join(EVENTS_FILE).exists() {
            return Err(StudyError::AlreadyExists(study_id));
        }
        fs::create_dir_all(&dir)?;

        let mut shuffled = image_ids.to_vec();
        shuffled.shuffle(&mut rng_from_seed(derive_seed(seed, &["batches"])));
        let batches: Vec<Vec<String>> =
            shuffled.chunks(config.batch_size).map(|c| c.to_vec()).collect();

        let created = Event::StudyCreated {
            study_id: study_id.clone(),
            config,
            seed,
            images: image_ids.to_vec(),
            batches,
            training_items,
            at: now,
        };
        let (mut log, _) = EventLog::open(dir.join(EVENTS_FILE))?;
        let record = log.append(created)?;
        let state = StudyState::from_created(&record.event)?;
        Ok(Study {
            dir,
            log,
            state,
            snapshot_seq: 0,
        })
    }

    pub fn open(&self, study_id: &str) -> Result<Study, StudyError> {
        let dir = self.study_dir(study_id);
        if !dir.join(EVENTS_FILE).exists() {
            return Err(StudyError::UnknownStudy(study_id.to_string()));
        }
        Study::open_dir(dir)
    }
}

/// Result of a training answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingOutcome {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
    pub status: ParticipantStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionSubmission {
    pub participant_id: String,
    pub batch_id: u32,
    pub repetition: u8,
    pub image_id: String,
    pub slider_position: u32,
    #[serde(default)]
    pub duration_ms: u64,
    #[serde(default)]
    pub request_token: Option<String>,
}

/// An open study: folded state plus its log.
#[derive(Debug)]
pub struct Study {
    dir: PathBuf,
    log: EventLog,
    state: StudyState,
    snapshot_seq: u64,
}

impl Study {
    /// Loads the snapshot if present, then replays newer log records.
    pub fn open_dir(dir: impl Into<PathBuf>) -> Result<Study, StudyError> {
        let dir = dir.into();
        let (log, records) = EventLog::open(dir.join(EVENTS_FILE))?;
        let corrupt = |detail: String| StudyError::Corrupt {
            path: dir.display().to_string(),
            detail,
        };
        let snap_path = dir.join(SNAPSHOT_FILE);
        let snapshot: Option<Snapshot> = if snap_path.exists() {
            let bytes = fs::read(&snap_path)?;
            Some(serde_json::from_slice(&bytes).map_err(|e| corrupt(format!("snapshot: {e}")))?)
        } else {
            None
        };
        let (mut state, snapshot_seq) = match snapshot {
            Some(s) => {
                if s.seq > log.last_seq() {
                    return Err(corrupt(format!(
                        "snapshot at seq {} is ahead of the log (last seq {})",
                        s.seq,
                        log.last_seq()
                    )));
                }
                (s.state, s.seq)
            }
            None => {
                let first = records.first().ok_or_else(|| corrupt("empty event log".into()))?;
                (StudyState::from_created(&first.event)?, 1)
            }
        };
        for r in records.iter().filter(|r| r.seq > snapshot_seq) {
            state.apply(r.seq, &r.event);
        }
        Ok(Study {
            dir,
            log,
            state,
            snapshot_seq,
        })
    }

    pub fn id(&self) -> &str {
        &self.state.study_id
    }

    pub fn state(&self) -> &StudyState {
        &self.state
    }

    pub fn config(&self) -> &StudyConfig {
        &self.state.config
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self) -> &Path {
        self.log.path()
    }

    fn commit(&mut self, event: Event) -> Result<(), StudyError> {
        let record = self.log.append(event)?;
        self.state.apply(record.seq, &record.event);
        if record.seq - self.snapshot_seq >= SNAPSHOT_EVERY {
            self.snapshot()?;
        }
        Ok(())
    }

    /// Writes the folded state; recovery then only replays newer records.
    pub fn snapshot(&mut self) -> Result<(), StudyError> {
        let snap = Snapshot {
            seq: self.state.last_seq,
            state: self.state.clone(),
        };
        write_atomic(&self.dir.join(SNAPSHOT_FILE), &serde_json::to_vec(&snap)?)?;
        self.snapshot_seq = snap.seq;
        Ok(())
    }

    /// Flushes the log and writes a snapshot.
    pub fn close(&mut self) -> Result<(), StudyError> {
        self.log.flush()?;
        self.snapshot()
    }

    /// Registers a participant (no-op if already known).
    pub fn register_participant(&mut self, participant_id: &str, now: u64) -> Result<(), StudyError> {
        if self.state.participants.contains_key(participant_id) {
            return Ok(());
        }
        if participant_id.is_empty() {
            return Err(StudyError::UnknownParticipant(String::new()));
        }
        let qualified = self.state.training_items.is_empty();
        self.commit(Event::ParticipantRegistered {
            participant_id: participant_id.to_string(),
            qualified,
            at: now,
        })
    }

    fn status(&self, participant_id: &str) -> Result<ParticipantStatus, StudyError> {
        self.state
            .participants
            .get(participant_id)
            .map(|p| p.status)
            .ok_or_else(|| StudyError::UnknownParticipant(participant_id.to_string()))
    }

    fn training_required(&self) -> usize {
        let n = self.state.training_items.len();
        self.state.config.training_pass_count.map_or(n, |c| c.min(n))
    }

    pub fn submit_training_opinion(
        &mut self,
        participant_id: &str,
        item_id: &str,
        scale: f64,
        request_token: Option<String>,
        now: u64,
    ) -> Result<TrainingOutcome, StudyError> {
        if let Some(TokenOutcome::Training { item_id, accepted }) =
            request_token.as_ref().and_then(|t| self.state.tokens.get(t)).cloned()
        {
            return self.training_outcome(participant_id, &item_id, accepted);
        }
        if self.status(participant_id)? != ParticipantStatus::InTraining {
            return Err(StudyError::NotInTraining(participant_id.to_string()));
        }
        let item = self
            .state
            .training_items
            .iter()
            .find(|i| i.item_id == item_id)
            .cloned()
            .ok_or_else(|| StudyError::UnknownTrainingItem(item_id.to_string()))?;
        let accepted = item.accepts(scale);
        self.commit(Event::TrainingAnswered {
            participant_id: participant_id.to_string(),
            item_id: item_id.to_string(),
            scale,
            accepted,
            request_token,
            at: now,
        })?;
        let passed = self.state.participants[participant_id].training_accepted.len();
        if accepted && passed >= self.training_required() {
            self.commit(Event::StatusChanged {
                participant_id: participant_id.to_string(),
                status: ParticipantStatus::Qualified,
                at: now,
            })?;
        }
        self.training_outcome(participant_id, item_id, accepted)
    }

    fn training_outcome(
        &self,
        participant_id: &str,
        item_id: &str,
        accepted: bool,
    ) -> Result<TrainingOutcome, StudyError> {
        let hint = (!accepted).then(|| {
            self.state
                .training_items
                .iter()
                .find(|i| i.item_id == item_id)
                .map(|i| i.hint_text.clone())
                .unwrap_or_default()
        });
        Ok(TrainingOutcome {
            accepted,
            hint,
            status: self.status(participant_id)?,
        })
    }

    /// Returns the participant's current work, starting a new batch
    /// repetition when one is due.
    ///
    /// Priority: a repetition already in progress; a repetition 2 whose gap
    /// has elapsed; a re-annotation; the next unstarted batch.
    pub fn next_assignment(&mut self, participant_id: &str, now: u64) -> Result<NextStep, StudyError> {
        let status = self.status(participant_id)?;
        if status == ParticipantStatus::InTraining {
            let accepted = &self.state.participants[participant_id].training_accepted;
            let items = self
                .state
                .training_items
                .iter()
                .filter(|i| !accepted.contains(&i.item_id))
                .cloned()
                .collect();
            return Ok(NextStep::Training { items });
        }
        if let Some(a) = self.state.in_progress(participant_id) {
            return Ok(NextStep::Assignment(a.into()));
        }
        let participant = &self.state.participants[participant_id];
        let gap = self.state.config.min_repetition_gap_ms;
        let mut second_due = None;
        let mut redo = None;
        let mut fresh = None;
        let mut wait_until: Option<u64> = None;
        for batch_id in 0..self.state.batches.len() as u32 {
            let generation = participant.generation(batch_id);
            if status == ParticipantStatus::Flagged && generation == 0 {
                continue;
            }
            let rep1 = self.state.assignment(participant_id, batch_id, generation, 1);
            let rep2 = self.state.assignment(participant_id, batch_id, generation, 2);
            match (rep1, rep2) {
                (None, _) => {
                    if generation > 0 {
                        redo.get_or_insert((batch_id, generation));
                    } else {
                        fresh.get_or_insert((batch_id, generation));
                    }
                }
                (Some(r1), None) => {
                    if let Some(done) = r1.completed_at {
                        let available = done.saturating_add(gap);
                        if now >= available {
                            second_due.get_or_insert((batch_id, generation));
                        } else {
                            wait_until = Some(wait_until.map_or(available, |w| w.min(available)));
                        }
                    }
                }
                _ => {}
            }
        }
        let (batch_id, generation, repetition) = match (second_due, redo, fresh) {
            (Some((b, g)), _, _) => (b, g, 2),
            (None, Some((b, g)), _) => (b, g, 1),
            (None, None, Some((b, g))) => (b, g, 1),
            (None, None, None) => {
                return Ok(match wait_until {
                    Some(available_at) => NextStep::Wait { available_at },
                    None => NextStep::Done,
                });
            }
        };
        self.start_assignment(participant_id, batch_id, generation, repetition, now)?;
        let a = self
            .state
            .assignment(participant_id, batch_id, generation, repetition)
            .expect("just started");
        Ok(NextStep::Assignment(a.into()))
    }

    fn start_assignment(
        &mut self,
        participant_id: &str,
        batch_id: u32,
        generation: u32,
        repetition: u8,
        now: u64,
    ) -> Result<(), StudyError> {
        let order_seed = derive_seed(
            self.state.seed,
            &[
                "order",
                participant_id,
                &batch_id.to_string(),
                &generation.to_string(),
                &repetition.to_string(),
            ],
        );
        let mut image_ids = self.state.batches[batch_id as usize].clone();
        image_ids.shuffle(&mut rng_from_seed(order_seed));
        self.commit(Event::AssignmentStarted {
            participant_id: participant_id.to_string(),
            batch_id,
            generation,
            repetition,
            image_ids,
            order_seed,
            at: now,
        })
    }

    /// Records one slider judgment. Completing repetition 2 runs the
    /// reliability gate for that batch.
    pub fn submit_opinion(&mut self, sub: OpinionSubmission, now: u64) -> Result<Opinion, StudyError> {
        if let Some(TokenOutcome::Opinion { index }) =
            sub.request_token.as_ref().and_then(|t| self.state.tokens.get(t))
        {
            return Ok(self.state.opinions[*index].clone());
        }
        let pid = sub.participant_id.as_str();
        let status = self.status(pid)?;
        if status == ParticipantStatus::InTraining {
            return Err(StudyError::NotQualified(pid.to_string()));
        }
        if sub.batch_id as usize >= self.state.batches.len() {
            return Err(StudyError::UnknownBatch(sub.batch_id));
        }
        let generation = self.state.participants[pid].generation(sub.batch_id);
        if status == ParticipantStatus::Flagged && generation == 0 {
            return Err(StudyError::NotQualified(pid.to_string()));
        }
        let assignment = self
            .state
            .assignment(pid, sub.batch_id, generation, sub.repetition)
            .filter(|a| a.state == AssignmentState::InProgress)
            .ok_or_else(|| {
                StudyError::OutOfOrder(format!(
                    "batch {} repetition {} is not the active assignment",
                    sub.batch_id, sub.repetition
                ))
            })?;
        if !assignment.image_ids.contains(&sub.image_id) {
            return Err(StudyError::ImageNotInAssignment {
                image: sub.image_id.clone(),
                batch_id: sub.batch_id,
            });
        }
        if assignment.annotated.contains(&sub.image_id) {
            return Err(StudyError::Duplicate {
                image: sub.image_id.clone(),
                repetition: sub.repetition,
            });
        }
        let scale_value = self.state.config.slider().scale(sub.slider_position)?;
        let completes = assignment.annotated.len() + 1 == assignment.image_ids.len();

        if status == ParticipantStatus::Qualified {
            self.commit(Event::StatusChanged {
                participant_id: pid.to_string(),
                status: ParticipantStatus::Active,
                at: now,
            })?;
        }
        let opinion = Opinion {
            study_id: self.state.study_id.clone(),
            participant_id: pid.to_string(),
            image_id: sub.image_id.clone(),
            batch_id: sub.batch_id,
            repetition: sub.repetition,
            scale_value,
            slider_position: sub.slider_position,
            submitted_at: now,
            duration_ms: sub.duration_ms,
            generation,
        };
        self.commit(Event::OpinionRecorded {
            opinion: opinion.clone(),
            request_token: sub.request_token.clone(),
        })?;
        if completes {
            self.commit(Event::AssignmentCompleted {
                participant_id: pid.to_string(),
                batch_id: sub.batch_id,
                generation,
                repetition: sub.repetition,
                at: now,
            })?;
            if sub.repetition == 2 {
                self.record_gate(pid, sub.batch_id, generation, now)?;
            }
        }
        Ok(opinion)
    }

    fn record_gate(
        &mut self,
        participant_id: &str,
        batch_id: u32,
        generation: u32,
        now: u64,
    ) -> Result<(Option<f64>, bool), StudyError> {
        let (srcc, passed) = self.state.compute_gate(participant_id, batch_id, generation)?;
        self.commit(Event::GateEvaluated {
            participant_id: participant_id.to_string(),
            batch_id,
            generation,
            srcc,
            passed,
            at: now,
        })?;
        let status = self.status(participant_id)?;
        let next = match (passed, status) {
            (false, s) if s != ParticipantStatus::Flagged => Some(ParticipantStatus::Flagged),
            (true, ParticipantStatus::Flagged) => Some(ParticipantStatus::Active),
            _ => None,
        };
        if let Some(status) = next {
            self.commit(Event::StatusChanged {
                participant_id: participant_id.to_string(),
                status,
                at: now,
            })?;
        }
        Ok((srcc, passed))
    }

    /// Gate result for the participant's current generation of a batch,
    /// evaluating and recording it if both repetitions are complete and no
    /// result exists yet. A failed generation reports its recorded result
    /// until the re-annotation is complete.
    pub fn evaluate_reliability_gate(
        &mut self,
        participant_id: &str,
        batch_id: u32,
        now: u64,
    ) -> Result<super::GateRecord, StudyError> {
        self.status(participant_id)?;
        if batch_id as usize >= self.state.batches.len() {
            return Err(StudyError::UnknownBatch(batch_id));
        }
        let current = self.state.participants[participant_id].generation(batch_id);
        let complete = |study: &Study, g| {
            (1..=2).all(|rep| {
                study
                    .state
                    .assignment(participant_id, batch_id, g, rep)
                    .is_some_and(|a| a.completed_at.is_some())
            })
        };
        let generation = if complete(self, current) {
            current
        } else if current > 0 && self.state.gate(participant_id, batch_id, current - 1).is_some() {
            current - 1
        } else {
            return Err(StudyError::IncompleteRepetitions {
                participant: participant_id.to_string(),
                batch_id,
            });
        };
        if self.state.gate(participant_id, batch_id, generation).is_none() {
            self.record_gate(participant_id, batch_id, generation, now)?;
        }
        Ok(self.state.gate(participant_id, batch_id, generation).cloned().expect("recorded"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::AssignmentState;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i:03}")).collect()
    }

    fn cfg(batch: usize) -> StudyConfig {
        StudyConfig {
            batch_size: batch,
            min_repetition_gap_ms: 1000,
            ..StudyConfig::default()
        }
    }

    fn training() -> Vec<TrainingItem> {
        vec![
            TrainingItem {
                item_id: "t1".into(),
                image_id: "train-a".into(),
                accepted_iis_range: (0.25, 0.45),
                hint_text: "look at the foliage".into(),
            },
            TrainingItem {
                item_id: "t2".into(),
                image_id: "train-b".into(),
                accepted_iis_range: (0.6, 1.0),
                hint_text: "already sharp".into(),
            },
        ]
    }

    /// Slider position whose scale is closest to `scale`.
    fn pos(study: &Study, scale: f64) -> u32 {
        study.config().slider().position(scale)
    }

    fn annotate(study: &mut Study, pid: &str, now: u64, f: impl Fn(&str) -> f64) -> (u32, u8) {
        let step = study.next_assignment(pid, now).unwrap();
        let NextStep::Assignment(a) = step else { panic!("expected assignment, got {step:?}") };
        for img in &a.remaining {
            let p = pos(study, f(img));
            study
                .submit_opinion(
                    OpinionSubmission {
                        participant_id: pid.into(),
                        batch_id: a.batch_id,
                        repetition: a.repetition,
                        image_id: img.clone(),
                        slider_position: p,
                        duration_ms: 5,
                        request_token: None,
                    },
                    now,
                )
                .unwrap();
        }
        (a.batch_id, a.repetition)
    }

    fn truth(img: &str) -> f64 {
        let i: f64 = img[3..].parse().unwrap();
        0.06 + 0.9 * i / 30.0
    }

    #[test]
    fn batch_partition_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let s = store.create(&ids(785), vec![], StudyConfig::default(), 1, 0).unwrap();
        let sizes: Vec<usize> = s.state().batches.iter().map(Vec::len).collect();
        assert_eq!(sizes.len(), 9);
        assert_eq!(&sizes[..8], &[90; 8]);
        assert_eq!(sizes[8], 65);
        let s = store.create(&ids(90), vec![], StudyConfig::default(), 1, 0).unwrap();
        assert_eq!(s.state().batches.len(), 1);
        assert!(matches!(
            store.create(&[], vec![], StudyConfig::default(), 1, 0),
            Err(StudyError::EmptyCorpus)
        ));
    }

    #[test]
    fn training_gate() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(10), training(), cfg(10), 3, 0).unwrap();
        s.register_participant("ann", 0).unwrap();
        let ok = s.submit_training_opinion("ann", "t1", 0.30, None, 1).unwrap();
        assert!(ok.accepted);
        assert_eq!(ok.status, ParticipantStatus::InTraining);
        let bad = s.submit_training_opinion("ann", "t2", 0.30, None, 2).unwrap();
        assert!(!bad.accepted);
        assert_eq!(bad.hint.as_deref(), Some("already sharp"));
        let bad = s.submit_training_opinion("ann", "t1", 0.80, None, 2).unwrap();
        assert!(!bad.accepted);
        let ok = s.submit_training_opinion("ann", "t2", 0.9, None, 3).unwrap();
        assert_eq!(ok.status, ParticipantStatus::Qualified);
        assert!(matches!(
            s.submit_training_opinion("ann", "t1", 0.3, None, 4),
            Err(StudyError::NotInTraining(_))
        ));
    }

    #[test]
    fn unqualified_cannot_annotate() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(10), training(), cfg(10), 3, 0).unwrap();
        s.register_participant("ann", 0).unwrap();
        assert!(matches!(s.next_assignment("ann", 0).unwrap(), NextStep::Training { .. }));
        let err = s
            .submit_opinion(
                OpinionSubmission {
                    participant_id: "ann".into(),
                    batch_id: 0,
                    repetition: 1,
                    image_id: "img000".into(),
                    slider_position: 3,
                    duration_ms: 0,
                    request_token: None,
                },
                0,
            )
            .unwrap_err();
        assert!(matches!(err, StudyError::NotQualified(_)));
    }

    #[test]
    fn slider_endpoints_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(4), vec![], cfg(4), 3, 0).unwrap();
        s.register_participant("ann", 0).unwrap();
        let NextStep::Assignment(a) = s.next_assignment("ann", 0).unwrap() else { panic!() };
        let mut sub = OpinionSubmission {
            participant_id: "ann".into(),
            batch_id: a.batch_id,
            repetition: 1,
            image_id: a.image_ids[0].clone(),
            slider_position: 99,
            duration_ms: 10,
            request_token: Some("tok-1".into()),
        };
        let o = s.submit_opinion(sub.clone(), 1).unwrap();
        assert_eq!(o.scale_value, 1.0);
        // Retried request token: same record, no new event.
        let again = s.submit_opinion(sub.clone(), 2).unwrap();
        assert_eq!(again, o);
        assert_eq!(s.state().opinions.len(), 1);
        sub.request_token = None;
        assert!(matches!(s.submit_opinion(sub.clone(), 3), Err(StudyError::Duplicate { .. })));
        sub.image_id = a.image_ids[1].clone();
        sub.slider_position = 0;
        assert_eq!(s.submit_opinion(sub.clone(), 3).unwrap().scale_value, 0.05);
        sub.image_id = a.image_ids[2].clone();
        sub.slider_position = 100;
        assert!(matches!(s.submit_opinion(sub.clone(), 3), Err(StudyError::SliderPosition { .. })));
        sub.image_id = "nope".into();
        sub.slider_position = 5;
        assert!(matches!(s.submit_opinion(sub.clone(), 3), Err(StudyError::ImageNotInAssignment { .. })));
        sub.repetition = 2;
        sub.image_id = a.image_ids[2].clone();
        assert!(matches!(s.submit_opinion(sub, 3), Err(StudyError::OutOfOrder(_))));
    }

    #[test]
    fn repetition_gap_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(5), vec![], cfg(5), 3, 0).unwrap();
        s.register_participant("ann", 0).unwrap();
        annotate(&mut s, "ann", 100, truth);
        assert_eq!(s.next_assignment("ann", 500).unwrap(), NextStep::Wait { available_at: 1100 });
        let (_, rep) = annotate(&mut s, "ann", 1100, truth);
        assert_eq!(rep, 2);
        assert_eq!(s.next_assignment("ann", 5000).unwrap(), NextStep::Done);
    }

    #[test]
    fn presentation_order_is_permutation() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(30), vec![], cfg(30), 3, 0).unwrap();
        let mut orders = Vec::new();
        for pid in ["a", "b"] {
            s.register_participant(pid, 0).unwrap();
            annotate(&mut s, pid, 0, truth);
            annotate(&mut s, pid, 2000, truth);
        }
        for a in &s.state().assignments {
            let mut sorted = a.image_ids.clone();
            sorted.sort();
            assert_eq!(sorted, ids(30));
            orders.push(a.image_ids.clone());
        }
        for i in 0..orders.len() {
            for j in i + 1..orders.len() {
                assert_ne!(orders[i], orders[j]);
            }
        }
    }

    #[test]
    fn failed_gate_excludes_and_reannotates() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(10), vec![], cfg(10), 9, 0).unwrap();
        for pid in ["good", "bad"] {
            s.register_participant(pid, 0).unwrap();
            annotate(&mut s, pid, 0, truth);
        }
        annotate(&mut s, "good", 2000, truth);
        // Rank-reversed second pass.
        annotate(&mut s, "bad", 2000, |img| 0.39 - truth(img));
        let gate = s.evaluate_reliability_gate("bad", 0, 3000).unwrap();
        assert!(!gate.passed);
        assert!(gate.srcc.unwrap() < -0.99);
        assert!(s.evaluate_reliability_gate("good", 0, 3000).unwrap().passed);
        assert_eq!(s.status("bad").unwrap(), ParticipantStatus::Flagged);
        assert!(s
            .state()
            .assignments
            .iter()
            .filter(|a| a.participant_id == "bad")
            .all(|a| a.state == AssignmentState::ReannotationRequired));

        let agg = s.state().aggregate().unwrap();
        assert_eq!(agg.records.len(), 10);
        assert!(agg.records.iter().all(|r| r.n_opinions == 2));

        // Re-annotation in generation 1 supersedes the failed pair.
        let (_, rep) = annotate(&mut s, "bad", 4000, truth);
        assert_eq!(rep, 1);
        annotate(&mut s, "bad", 6000, truth);
        assert_eq!(s.status("bad").unwrap(), ParticipantStatus::Active);
        let agg = s.state().aggregate().unwrap();
        assert!(agg.records.iter().all(|r| r.n_opinions == 4));
        assert_eq!(s.state().opinions.len(), 60);
    }

    #[test]
    fn incomplete_gate_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let mut s = store.create(&ids(3), vec![], cfg(3), 9, 0).unwrap();
        s.register_participant("a", 0).unwrap();
        annotate(&mut s, "a", 0, truth);
        assert!(matches!(
            s.evaluate_reliability_gate("a", 0, 10),
            Err(StudyError::IncompleteRepetitions { .. })
        ));
        let agg = s.state().aggregate().unwrap();
        assert!(agg.records.is_empty());
        assert_eq!(agg.missing.len(), 3);
    }

    #[test]
    fn replay_restores_state() {
        let dir = tempfile::tempdir().unwrap();
        let store = StudyStore::new(dir.path());
        let (id, before) = {
            let mut s = store.create(&ids(6), training(), cfg(3), 9, 0).unwrap();
            s.register_participant("a", 0).unwrap();
            s.submit_training_opinion("a", "t1", 0.3, Some("x".into()), 0).unwrap();
            s.submit_training_opinion("a", "t2", 0.7, None, 0).unwrap();
            annotate(&mut s, "a", 0, truth);
            s.snapshot().unwrap();
            annotate(&mut s, "a", 0, truth);
            annotate(&mut s, "a", 5000, truth);
            (s.id().to_string(), s.state().clone())
        };
        let reopened = store.open(&id).unwrap();
        assert_eq!(reopened.state(), &before);
        // Without the snapshot the full log gives the same state.
        fs::remove_file(store.study_dir(&id).join(SNAPSHOT_FILE)).unwrap();
        assert_eq!(store.open(&id).unwrap().state(), &before);
    }
}
