//! Append-only, line-delimited event log with sequence numbers.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::events::Event;
use super::StudyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub event: Event,
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl EventLog {
    /// Opens (creating if needed) the log and returns every stored record.
    ///
    /// Any unparsable line, or a sequence number that does not increase by
    /// exactly one, is reported as corruption.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<EventRecord>), StudyError> {
        let path = path.as_ref().to_path_buf();
        let records = if path.exists() {
            read_records(&path)?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let next_seq = records.last().map_or(1, |r| r.seq + 1);
        Ok((
            Self {
                path,
                file,
                next_seq,
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.next_seq - 1
    }

    pub fn append(&mut self, event: Event) -> Result<EventRecord, StudyError> {
        let record = EventRecord {
            seq: self.next_seq,
            event,
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        self.next_seq += 1;
        Ok(record)
    }

    pub fn flush(&mut self) -> Result<(), StudyError> {
        self.file.flush()?;
        self.file.sync_all()?;
        Ok(())
    }
}

fn read_records(path: &Path) -> Result<Vec<EventRecord>, StudyError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records: Vec<EventRecord> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&line).map_err(|e| StudyError::Corrupt {
            path: path.display().to_string(),
            detail: format!("line {}: {e}", i + 1),
        })?;
        let expected = records.last().map_or(1, |r| r.seq + 1);
        if record.seq != expected {
            return Err(StudyError::Corrupt {
                path: path.display().to_string(),
                detail: format!("line {}: sequence {} where {} expected", i + 1, record.seq, expected),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StudyError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
