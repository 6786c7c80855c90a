//! Zero-shot IIS: evaluate a no-reference quality predictor on a grid of
//! downscaled copies and take the largest scale where quality peaks.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use super::{EvalError, PredictionTable};
use crate::corpus::CorpusManifest;
use crate::resample::{downscale, Image, ResampleSpec, ScaleFactor, S_LB};
use crate::tables::{read_csv, ScoreRow, TableError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no score for image {image_id} at scale {scale}")]
    Missing { image_id: String, scale: f64 },
    #[error("quality {0} is not finite")]
    NonFinite(f64),
    #[error("command failed: {0}")]
    Command(String),
    #[error("could not parse a quality score from {0:?}")]
    Parse(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("image: {0}")]
    Image(String),
    #[error("empty quality curve")]
    EmptyCurve,
    #[error("grid needs at least 2 scales, got {0}")]
    Grid(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A no-reference quality predictor applied to an image downscaled by `scale`.
pub trait QualityOracle: Send + Sync {
    fn quality(&self, image_id: &str, scale: f64) -> Result<f64, OracleError>;
}

/// Wraps a closure as an oracle.
pub struct FnOracle<F>(pub F);

impl<F> QualityOracle for FnOracle<F>
where
    F: Fn(&str, f64) -> f64 + Send + Sync,
{
    fn quality(&self, image_id: &str, scale: f64) -> Result<f64, OracleError> {
        Ok((self.0)(image_id, scale))
    }
}

fn scale_key(scale: f64) -> i64 {
    (scale * 1e6).round() as i64
}

/// Precomputed scores, looked up by image id and scale (to 1e-6).
#[derive(Debug, Clone, Default)]
pub struct ScoresFileOracle {
    scores: HashMap<(String, i64), f64>,
}

impl ScoresFileOracle {
    pub fn from_rows(rows: &[ScoreRow]) -> Self {
        Self {
            scores: rows
                .iter()
                .map(|r| ((r.image_id.clone(), scale_key(r.scale)), r.quality))
                .collect(),
        }
    }

    /// Reads `image_id,scale,quality` rows.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let rows: Vec<ScoreRow> = read_csv(path)?;
        Ok(Self::from_rows(&rows))
    }

    /// Scores per image, ascending by scale.
    pub fn curves(&self) -> Vec<QualityCurve> {
        let mut by_id: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for ((id, k), q) in &self.scores {
            by_id.entry(id).or_default().push((*k as f64 / 1e6, *q));
        }
        by_id
            .into_iter()
            .map(|(id, mut points)| {
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                QualityCurve {
                    image_id: id.to_string(),
                    points,
                }
            })
            .collect()
    }
}

impl QualityOracle for ScoresFileOracle {
    fn quality(&self, image_id: &str, scale: f64) -> Result<f64, OracleError> {
        self.scores
            .get(&(image_id.to_string(), scale_key(scale)))
            .copied()
            .ok_or_else(|| OracleError::Missing {
                image_id: image_id.to_string(),
                scale,
            })
    }
}

/// Runs an external predictor once per rendered scale.
///
/// The template is split on whitespace and executed without a shell;
/// `{image_path}`, `{image_id}` and `{scale}` are substituted per argument.
/// Standard output must hold a single decimal number.
pub struct CommandOracle {
    argv: Vec<String>,
    corpus: CorpusManifest,
    spec: ResampleSpec,
    workdir: tempfile::TempDir,
    counter: AtomicU64,
}

impl CommandOracle {
    pub fn new(template: &str, corpus: CorpusManifest, spec: ResampleSpec) -> Result<Self, OracleError> {
        let argv: Vec<String> = template.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(OracleError::Command("empty command template".into()));
        }
        Ok(Self {
            argv,
            corpus,
            spec,
            workdir: tempfile::tempdir()?,
            counter: AtomicU64::new(0),
        })
    }

    fn render(&self, image_id: &str, scale: f64) -> Result<PathBuf, OracleError> {
        let entry = self
            .corpus
            .get(image_id)
            .ok_or_else(|| OracleError::UnknownImage(image_id.to_string()))?;
        let img = Image::open(&entry.file_path, image_id).map_err(|e| OracleError::Image(e.to_string()))?;
        let s = ScaleFactor::new(scale).map_err(|e| OracleError::Image(e.to_string()))?;
        let out = downscale(&img, s, &self.spec).map_err(|e| OracleError::Image(e.to_string()))?;
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let path = self.workdir.path().join(format!("r{n}.png"));
        out.save_png(&path).map_err(|e| OracleError::Image(e.to_string()))?;
        Ok(path)
    }
}

impl QualityOracle for CommandOracle {
    fn quality(&self, image_id: &str, scale: f64) -> Result<f64, OracleError> {
        let path = self.render(image_id, scale)?;
        let path_str = path.display().to_string();
        let scale_str = scale.to_string();
        let args: Vec<String> = self
            .argv
            .iter()
            .map(|a| {
                a.replace("{image_path}", &path_str)
                    .replace("{image_id}", image_id)
                    .replace("{scale}", &scale_str)
            })
            .collect();
        let output = Command::new(&args[0]).args(&args[1..]).output();
        let _ = std::fs::remove_file(&path);
        let output = output.map_err(|e| OracleError::Command(format!("{}: {e}", args[0])))?;
        if !output.status.success() {
            return Err(OracleError::Command(format!(
                "{} exited with {}: {}",
                args[0],
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let text = String::from_utf8_lossy(&output.stdout);
        let trimmed = text.trim();
        trimmed
            .parse::<f64>()
            .map_err(|_| OracleError::Parse(trimmed.to_string()))
    }
}

/// `n_s` evenly spaced scales from `S_LB` to 1 inclusive.
pub fn scale_grid(n_s: usize) -> Result<Vec<f64>, OracleError> {
    if n_s < 2 {
        return Err(OracleError::Grid(n_s));
    }
    let step = (1.0 - S_LB) / (n_s - 1) as f64;
    Ok((0..n_s)
        .map(|k| if k == n_s - 1 { 1.0 } else { S_LB + step * k as f64 })
        .collect())
}

/// Quality as a function of scale for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityCurve {
    pub image_id: String,
    pub points: Vec<(f64, f64)>,
}

/// Largest scale attaining the maximum quality, ignoring points below `S_LB`.
pub fn predict_from_curve(curve: &QualityCurve) -> Result<f64, OracleError> {
    let mut best: Option<(f64, f64)> = None;
    for &(s, q) in &curve.points {
        if s < S_LB {
            continue;
        }
        if !q.is_finite() {
            return Err(OracleError::NonFinite(q));
        }
        best = match best {
            Some((bs, bq)) if q < bq || (q == bq && s < bs) => Some((bs, bq)),
            _ => Some((s, q)),
        };
    }
    best.map(|(s, _)| s).ok_or(OracleError::EmptyCurve)
}

/// Zero-shot IIS of one image on an `n_s`-point grid.
pub fn predict_multiscale(image_id: &str, oracle: &dyn QualityOracle, n_s: usize) -> Result<f64, OracleError> {
    let points = scale_grid(n_s)?
        .into_iter()
        .map(|s| Ok((s, oracle.quality(image_id, s)?)))
        .collect::<Result<Vec<_>, OracleError>>()?;
    predict_from_curve(&QualityCurve {
        image_id: image_id.to_string(),
        points,
    })
}

/// Runs [`predict_multiscale`] over `ids` on at most `threads` workers.
pub fn predict_corpus(
    ids: &[String],
    oracle: &dyn QualityOracle,
    n_s: usize,
    threads: usize,
) -> Result<PredictionTable, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EvalError::InvalidSpec(e.to_string()))?;
    let results = pool.install(|| {
        ids.par_iter()
            .map(|id| {
                predict_multiscale(id, oracle, n_s)
                    .map(|p| (id.clone(), p))
                    .map_err(|source| EvalError::Oracle {
                        image_id: id.clone(),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut table = PredictionTable::default();
    for (id, p) in results {
        table.insert(id, p);
    }
    Ok(table)
}
