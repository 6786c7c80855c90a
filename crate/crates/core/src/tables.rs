//! Text formats for exchanged tables.
//!
//! Tabular files are comma-separated with a header row; record streams are
//! line-delimited JSON. Undefined coefficients are written as `NA`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{AgreementReport, LeverageReport, MetricReport, MoisRecord, SensitivityPair};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} line {line}: {source}")]
    Json {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TableError + '_ {
    move |source| TableError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, TableError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_jsonl(BufReader::new(file), &path.display().to_string())
}

pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R, name: &str) -> Result<Vec<T>, TableError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| TableError::Io {
            path: name.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| TableError::Json {
            path: name.to_string(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), TableError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).map_err(|source| TableError::Json {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, TableError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_csv(file, &path.display().to_string())
}

pub fn parse_csv<T: DeserializeOwned, R: Read>(reader: R, name: &str) -> Result<Vec<T>, TableError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|source| TableError::Csv {
            path: name.to_string(),
            source,
        })
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), TableError> {
    let path = path.as_ref();
    let bytes = csv_bytes(rows).map_err(|source| TableError::Csv {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// CSV encoding of `rows` with a header derived from the field names.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn write_mois(path: impl AsRef<Path>, records: &[MoisRecord]) -> Result<(), TableError> {
    write_csv(path, records)
}

pub fn read_mois(path: impl AsRef<Path>) -> Result<Vec<MoisRecord>, TableError> {
    read_csv(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub image_id: String,
    pub predicted_iis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub image_id: String,
    pub scale: f64,
    pub quality: f64,
}

/// One individual rating at one scale, long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub image_id: String,
    pub scale: f64,
    pub rating: f64,
}

pub fn read_sensitivity_pairs(path: impl AsRef<Path>) -> Result<Vec<SensitivityPair>, TableError> {
    read_csv(path)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `split,srcc,plcc,rmse,mae` with one row per split and a final `median` row.
pub fn metric_report_csv(per_split: &[MetricReport], median: &MetricReport) -> String {
    let mut out = String::from("split,srcc,plcc,rmse,mae\n");
    let row = |label: String, m: &MetricReport| {
        format!("{label},{},{},{},{}\n", fmt_opt(m.srcc), fmt_opt(m.plcc), m.rmse, m.mae)
    };
    for (i, m) in per_split.iter().enumerate() {
        out.push_str(&row(i.to_string(), m));
    }
    out.push_str(&row("median".into(), median));
    out
}

pub fn agreement_csv(reports: &[AgreementReport]) -> String {
    let mut out = String::from("group_size,n_pairs,srcc_mean,srcc_sd,rmsd_mean,rmsd_sd,undefined_srcc_pairs\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.group_size, r.n_pairs, r.srcc.mean, r.srcc.sd, r.rmsd.mean, r.rmsd.sd, r.undefined_srcc_pairs
        ));
    }
    out
}

pub fn sensitivity_csv(reports: &[LeverageReport]) -> String {
    let mut out = String::from("delta_s,delta_q,gamma,n_pairs\n");
    for r in reports {
        out.push_str(&format!("{},{},{},{}\n", r.delta_s, r.delta_q, r.gamma, r.n_pairs));
    }
    out
}
