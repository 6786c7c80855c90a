//! Corpus manifests: which images a study or export works on.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tables::{read_jsonl, write_jsonl, TableError};

/// Minimum image width accepted into a study corpus by default.
pub const DEFAULT_MIN_WIDTH: u32 = 2048;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate image id {0}")]
    DuplicateId(String),
    #[error("image {id}: file {path} is not readable: {detail}")]
    Unreadable { id: String, path: String, detail: String },
    #[error("image {id} is {width} px wide, below the minimum of {min}")]
    TooNarrow { id: String, width: u32, min: u32 },
    #[error("image {id}: manifest says {expected:?}, file is {actual:?}")]
    DimensionMismatch { id: String, expected: (u32, u32), actual: (u32, u32) },
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub image_id: String,
    pub file_path: PathBuf,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub source_tag: String,
    #[serde(default)]
    pub content_tags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<CorpusEntry>,
}

impl CorpusManifest {
    pub fn new(entries: Vec<CorpusEntry>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.image_id.as_str()) {
                return Err(CorpusError::DuplicateId(e.image_id.clone()));
            }
        }
        Ok(Self { entries })
    }

    /// Reads a line-delimited manifest. Relative file paths are resolved
    /// against the manifest's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut entries: Vec<CorpusEntry> = read_jsonl(path)?;
        for e in &mut entries {
            if e.file_path.is_relative() {
                e.file_path = base.join(&e.file_path);
            }
        }
        Self::new(entries)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        write_jsonl(path, &self.entries)?;
        Ok(())
    }

    /// Builds a manifest from every PNG in `dir`, ids taken from file stems.
    pub fn scan_dir(dir: impl AsRef<Path>, source_tag: &str) -> Result<Self, CorpusError> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x.eq_ignore_ascii_case("png"))
            })
            .collect();
        paths.sort();
        let entries = paths
            .into_iter()
            .map(|p| {
                let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let (width, height) = image::image_dimensions(&p).map_err(|e| CorpusError::Unreadable {
                    id: id.clone(),
                    path: p.display().to_string(),
                    detail: e.to_string(),
                })?;
                Ok(CorpusEntry {
                    image_id: id,
                    file_path: p,
                    width,
                    height,
                    source_tag: source_tag.to_string(),
                    content_tags: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>, CorpusError>>()?;
        Self::new(entries)
    }

    /// Checks files are readable with the stated dimensions and at least
    /// `min_width` pixels wide.
    pub fn validate(&self, min_width: u32) -> Result<(), CorpusError> {
        for e in &self.entries {
            let actual = image::image_dimensions(&e.file_path).map_err(|err| CorpusError::Unreadable {
                id: e.image_id.clone(),
                path: e.file_path.display().to_string(),
                detail: err.to_string(),
            })?;
            if actual != (e.width, e.height) {
                return Err(CorpusError::DimensionMismatch {
                    id: e.image_id.clone(),
                    expected: (e.width, e.height),
                    actual,
                });
            }
            if e.width < min_width {
                return Err(CorpusError::TooNarrow {
                    id: e.image_id.clone(),
                    width: e.width,
                    min: min_width,
                });
            }
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.image_id.clone()).collect()
    }

    pub fn get(&self, image_id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
