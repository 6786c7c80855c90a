//! `iisa` command line. Each subcommand is a thin adapter over a library
//! operation. Usage errors exit 2; operation errors exit 1 with one JSON
//! line `{"error": kind, "message": ...}` on stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use iisa::corpus::{CorpusManifest, DEFAULT_MIN_WIDTH};
use iisa::evalhub::{
    evaluate, export_wiisa_manifest, join_ground_truth, make_splits, predict_corpus, CommandOracle,
    GroundTruthEntry, PredictionTable, QualityOracle, ScoresFileOracle, Split, SplitSpec,
};
use iisa::iis::WeakLabelConfig;
use iisa::resample::{KernelKind, ResampleSpec};
use iisa::stats::{
    aggregate_mois, check_concavity, concavity_violation_probability, intergroup_agreement,
    intergroup_agreement_pooled, leverage, opinions_by_image, srcc, AgreementConfig, MoisRecord, Opinion,
    Pooling, RatingPool,
};
use iisa::study::{StudyConfig, StudyStore, TrainingItem, HOUR_MS};
use iisa::tables::{
    agreement_csv, metric_report_csv, read_csv, read_jsonl, read_mois, read_sensitivity_pairs, sensitivity_csv,
    write_csv, write_mois, PredictionRow, RatingRow,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ServerConfig;

#[derive(Debug, Parser)]
#[command(name = "iisa", version, about = "Intrinsic image scale toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and create a study in a store.
    Ingest(IngestArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Write per-image MOIS and bootstrap intervals.
    Aggregate(AggregateArgs),
    /// Report intra-rater reliability gates.
    Reliability(ReliabilityArgs),
    /// Inter-group agreement over group sizes.
    Agreement(AgreementArgs),
    /// Export weakly labelled downscaled images and their manifest.
    Weaklabel(WeaklabelArgs),
    /// Generate repeated train/val/test splits.
    Splits(SplitsArgs),
    /// Evaluate predictions against MOIS over splits.
    Eval(EvalArgs),
    /// Zero-shot IIS from a quality predictor over a scale grid.
    PredictMultiscale(PredictArgs),
    /// Leverage of scale changes relative to quality changes.
    Sensitivity(SensitivityArgs),
    /// Check quality-over-scale concavity per image.
    Concavity(ConcavityArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Corpus manifest (JSONL).
    #[arg(long, conflicts_with = "scan")]
    pub corpus: Option<PathBuf>,
    /// Build the manifest from the PNG files in a directory.
    #[arg(long)]
    pub scan: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub source_tag: String,
    /// Where to write the scanned manifest.
    #[arg(long, requires = "scan")]
    pub write_manifest: Option<PathBuf>,
    /// Training items (JSONL).
    #[arg(long)]
    pub training: Option<PathBuf>,
    /// Study configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub min_gap_hours: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MIN_WIDTH)]
    pub min_width: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub study: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct StudySource {
    #[arg(long, requires = "study")]
    pub store: Option<PathBuf>,
    #[arg(long, requires = "store")]
    pub study: Option<String>,
    /// Opinion table (CSV or JSONL) instead of a study.
    #[arg(long, conflicts_with_all = ["store", "study"])]
    pub opinions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub source: StudySource,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the valid opinions used.
    #[arg(long)]
    pub opinions_out: Option<PathBuf>,
    /// Bootstrap seed; defaults to the study seed (0 for opinion tables).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub resamples: usize,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    #[command(flatten)]
    pub source: StudySource,
    #[arg(long)]
    pub participant: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[command(flatten)]
    pub source: StudySource,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub group_sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Ignore participant identity and sample opinions per image.
    #[arg(long)]
    pub pooled: bool,
    #[arg(long, default_value = "geometric")]
    pub pooling: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeaklabelArgs {
    /// Ground-truth manifest (JSONL of image_id, file_path, mois).
    #[arg(long, conflicts_with_all = ["mois", "corpus"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    pub mois: Option<PathBuf>,
    #[arg(long, requires = "mois")]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub n_wl: usize,
    #[arg(long, default_value_t = 0.65)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1536)]
    pub crop: u32,
    #[arg(long, default_value = "lanczos")]
    pub kernel: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.7)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test: f64,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SplitArgs {
    fn spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.train,
            val: self.val,
            test: self.test,
            n_repeats: self.repeats,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitsArgs {
    /// MOIS table whose image ids are split.
    #[arg(long, conflicts_with = "corpus")]
    pub mois: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV (image_id, predicted_iis).
    #[arg(long)]
    pub pred: PathBuf,
    /// MOIS CSV.
    #[arg(long)]
    pub gt: PathBuf,
    /// Splits JSON written by `splits`; generated from --seed when absent.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Precomputed scores CSV (image_id, scale, quality).
    #[arg(long, conflicts_with = "command")]
    pub scores: Option<PathBuf>,
    /// Predictor command; `{image_path}`, `{image_id}`, `{scale}` are substituted.
    #[arg(long, requires = "corpus")]
    pub command: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "lanczos")]
    pub kernel: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// CSV of mos_hi, mos_lo, delta_s.
    #[arg(long, conflicts_with_all = ["delta_s", "delta_q"])]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 0.85)]
    pub cutoff: f64,
    #[arg(long, requires = "delta_q")]
    pub delta_s: Option<f64>,
    #[arg(long, requires = "delta_s")]
    pub delta_q: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConcavityArgs {
    /// Ratings CSV (image_id, scale, rating).
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Operation failure reported on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl std::fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }
}

macro_rules! from_err {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new($kind, e)
            }
        })*
    };
}

from_err! {
    iisa::study::StudyError => "study",
    iisa::corpus::CorpusError => "corpus",
    iisa::tables::TableError => "table",
    iisa::stats::StatsError => "stats",
    iisa::evalhub::EvalError => "eval",
    iisa::evalhub::OracleError => "oracle",
    iisa::iis::IisError => "iis",
    std::io::Error => "io",
    serde_json::Error => "json",
    crate::ServerError => "server",
}

type CliResult = Result<(), CliError>;

/// Parses `argv` (including the program name) and runs it; returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind, "message": e.message}));
            1
        }
    }
}

pub fn execute(cmd: Command) -> CliResult {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Serve(a) => serve(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Reliability(a) => reliability(a),
        Command::Agreement(a) => agreement(a),
        Command::Weaklabel(a) => weaklabel(a),
        Command::Splits(a) => splits(a),
        Command::Eval(a) => eval(a),
        Command::PredictMultiscale(a) => predict(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Concavity(a) => concavity(a),
    }
}

fn summary(value: serde_json::Value) {
    println!("{value}");
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

fn parse_kernel(name: &str) -> Result<ResampleSpec, CliError> {
    let kind: KernelKind = name.parse().map_err(|e: String| CliError::new("usage", e))?;
    Ok(ResampleSpec::with_kernel(kind))
}

fn ingest(a: IngestArgs) -> CliResult {
    let corpus = match (&a.corpus, &a.scan) {
        (Some(p), None) => CorpusManifest::read(p)?,
        (None, Some(dir)) => {
            let m = CorpusManifest::scan_dir(dir, &a.source_tag)?;
            if let Some(out) = &a.write_manifest {
                m.write(out)?;
            }
            m
        }
        _ => return Err(CliError::new("usage", "one of --corpus or --scan is required")),
    };
    corpus.validate(a.min_width)?;
    let mut cfg: StudyConfig = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| CliError::new("config", format!("{}: {e}", p.display())))?
        }
        None => StudyConfig::default(),
    };
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let Some(h) = a.min_gap_hours {
        cfg.min_repetition_gap_ms = (h * HOUR_MS as f64).round() as u64;
    }
    let training: Vec<TrainingItem> = match &a.training {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    std::fs::create_dir_all(&a.store)?;
    let store = StudyStore::new(&a.store);
    let mut study = store.create(&corpus.ids(), training, cfg, a.seed, iisa::study::now_ms())?;
    study.close()?;
    let st = study.state();
    summary(json!({
        "study_id": st.study_id,
        "images": st.images.len(),
        "batches": st.batches.len(),
        "seed": a.seed,
    }));
    Ok(())
}

fn serve(a: ServeArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(p) => ServerConfig::load(p)?,
        None => {
            let (Some(store), Some(corpus)) = (a.store.clone(), a.corpus.clone()) else {
                return Err(CliError::new("usage", "--config or both --store and --corpus are required"));
            };
            ServerConfig {
                store,
                corpus,
                study: None,
                bind: "127.0.0.1".into(),
                port: 8080,
                admin_token: None,
                render_workers: None,
            }
        }
    };
    cfg.apply_env(|k| std::env::var(k).ok())?;
    if let Some(s) = a.store {
        cfg.store = s;
    }
    if let Some(c) = a.corpus {
        cfg.corpus = c;
    }
    if let Some(s) = a.study {
        cfg.study = Some(s);
    }
    if let Some(p) = a.port {
        cfg.port = p;
    }
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(crate::serve(cfg))?;
    Ok(())
}

/// Opinions from a table, or the valid opinions of a study with its seed.
fn load_opinions(src: &StudySource, valid_only: bool) -> Result<(Vec<Opinion>, Option<u64>), CliError> {
    match (&src.opinions, &src.store, &src.study) {
        (Some(p), _, _) => {
            let ops = if is_jsonl(p) { read_jsonl(p)? } else { read_csv(p)? };
            Ok((ops, None))
        }
        (None, Some(store), Some(id)) => {
            let study = StudyStore::new(store).open(id)?;
            let st = study.state();
            let ops = if valid_only {
                st.valid_opinions().into_iter().cloned().collect()
            } else {
                st.opinions.clone()
            };
            Ok((ops, Some(st.seed)))
        }
        _ => Err(CliError::new("usage", "--opinions or --store with --study is required")),
    }
}

fn aggregate(a: AggregateArgs) -> CliResult {
    let (ops, study_seed) = load_opinions(&a.source, true)?;
    let seed = a.seed.or(study_seed).unwrap_or(0);
    let (records, missing): (Vec<MoisRecord>, Vec<String>) = match (&a.source.store, &a.source.study, a.seed) {
        (Some(store), Some(id), None) => {
            let study = StudyStore::new(store).open(id)?;
            let agg = study.state().aggregate()?;
            (agg.records, agg.missing)
        }
        _ => (aggregate_mois(&opinions_by_image(&ops), seed, a.resamples)?, Vec::new()),
    };
    write_mois(&a.out, &records)?;
    if let Some(p) = &a.opinions_out {
        write_csv(p, &ops)?;
    }
    let mean_ci = records.iter().map(|r| r.ci95).sum::<f64>() / records.len().max(1) as f64;
    summary(json!({
        "out": a.out,
        "images": records.len(),
        "missing": missing,
        "mean_ci95": mean_ci,
        "seed": seed,
    }));
    Ok(())
}

#[derive(Serialize)]
struct GateRow {
    participant_id: String,
    batch_id: u32,
    generation: u32,
    srcc: String,
    passed: bool,
}

fn reliability(a: ReliabilityArgs) -> CliResult {
    let rows: Vec<GateRow> = match (&a.source.store, &a.source.study) {
        (Some(store), Some(id)) => {
            let study = StudyStore::new(store).open(id)?;
            study
                .state()
                .gates
                .iter()
                .map(|g| GateRow {
                    participant_id: g.participant_id.clone(),
                    batch_id: g.batch_id,
                    generation: g.generation,
                    srcc: g.srcc.map_or("NA".into(), |v| v.to_string()),
                    passed: g.passed,
                })
                .collect()
        }
        _ => {
            let (ops, _) = load_opinions(&a.source, false)?;
            table_gates(&ops, a.threshold)?
        }
    };
    let rows: Vec<GateRow> = rows
        .into_iter()
        .filter(|r| a.participant.as_ref().is_none_or(|p| &r.participant_id == p))
        .collect();
    let text = String::from_utf8(iisa::tables::csv_bytes(&rows).map_err(|e| CliError::new("table", e))?)
        .expect("csv is utf-8");
    let text = if rows.is_empty() {
        "participant_id,batch_id,generation,srcc,passed\n".to_string()
    } else {
        text
    };
    emit(a.out.as_deref(), &text)
}

/// Gates recomputed from an opinion table: SRCC between the two
/// repetitions of each (participant, batch, generation).
fn table_gates(ops: &[Opinion], threshold: f64) -> Result<Vec<GateRow>, CliError> {
    type Key = (String, u32, u32);
    let mut reps: BTreeMap<Key, [BTreeMap<String, f64>; 2]> = BTreeMap::new();
    for o in ops {
        if !(1..=2).contains(&o.repetition) {
            continue;
        }
        let entry = reps.entry((o.participant_id.clone(), o.batch_id, o.generation)).or_default();
        entry[(o.repetition - 1) as usize].insert(o.image_id.clone(), o.scale_value);
    }
    let mut rows = Vec::new();
    for ((pid, batch, generation), [r1, r2]) in reps {
        let shared: Vec<&String> = r1.keys().filter(|k| r2.contains_key(*k)).collect();
        if shared.len() < 2 {
            continue;
        }
        let a: Vec<f64> = shared.iter().map(|k| r1[*k]).collect();
        let b: Vec<f64> = shared.iter().map(|k| r2[*k]).collect();
        let r = srcc(&a, &b)?;
        rows.push(GateRow {
            participant_id: pid,
            batch_id: batch,
            generation,
            srcc: r.map_or("NA".into(), |v| v.to_string()),
            passed: r.is_some_and(|v| v >= threshold),
        });
    }
    Ok(rows)
}

fn agreement(a: AgreementArgs) -> CliResult {
    let (ops, _) = load_opinions(&a.source, true)?;
    let pooling = match a.pooling.as_str() {
        "geometric" => Pooling::Geometric,
        "arithmetic" => Pooling::Arithmetic,
        other => return Err(CliError::new("usage", format!("unknown pooling {other}"))),
    };
    let by_image = opinions_by_image(&ops);
    let reports = a
        .group_sizes
        .iter()
        .map(|&g| {
            let cfg = AgreementConfig {
                group_size: g,
                n_pairs: a.pairs,
                seed: a.seed,
                pooling,
            };
            if a.pooled {
                intergroup_agreement_pooled(&by_image, &cfg)
            } else {
                intergroup_agreement(&ops, &cfg)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = agreement_csv(&reports);
    text = with_seed_column(&text, a.seed);
    emit(a.out.as_deref(), &text)
}

fn with_seed_column(csv: &str, seed: u64) -> String {
    let mut lines = csv.lines();
    let mut out = String::new();
    if let Some(h) = lines.next() {
        out.push_str(h);
        out.push_str(",seed\n");
    }
    for l in lines {
        out.push_str(&format!("{l},{seed}\n"));
    }
    out
}

fn weaklabel(a: WeaklabelArgs) -> CliResult {
    let entries: Vec<GroundTruthEntry> = match (&a.manifest, &a.mois, &a.corpus) {
        (Some(p), _, _) => {
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            let mut e: Vec<GroundTruthEntry> = read_jsonl(p)?;
            for x in &mut e {
                if x.file_path.is_relative() {
                    x.file_path = base.join(&x.file_path);
                }
            }
            e
        }
        (None, Some(m), Some(c)) => join_ground_truth(&read_mois(m)?, &CorpusManifest::read(c)?)?,
        _ => return Err(CliError::new("usage", "--manifest or --mois with --corpus is required")),
    };
    let cfg = WeakLabelConfig {
        n_wl: a.n_wl,
        delta: a.delta,
        rng_seed: a.seed,
        interpolation: parse_kernel(&a.kernel)?,
    };
    let records = export_wiisa_manifest(&entries, &cfg, Some(a.crop), &a.out)?;
    summary(json!({
        "manifest": a.out.join(iisa::evalhub::MANIFEST_FILE),
        "records": records.len(),
        "seed": a.seed,
    }));
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct SplitsFile {
    pub seed: u64,
    pub spec: SplitSpec,
    pub splits: Vec<Split>,
}

fn ids_from(mois: Option<&Path>, corpus: Option<&Path>) -> Result<Vec<String>, CliError> {
    match (mois, corpus) {
        (Some(m), _) => Ok(read_mois(m)?.into_iter().map(|r| r.image_id).collect()),
        (None, Some(c)) => Ok(CorpusManifest::read(c)?.ids()),
        _ => Err(CliError::new("usage", "--mois or --corpus is required")),
    }
}

fn splits(a: SplitsArgs) -> CliResult {
    let ids = ids_from(a.mois.as_deref(), a.corpus.as_deref())?;
    let spec = a.split.spec();
    let splits = make_splits(&ids, &spec)?;
    let file = SplitsFile {
        seed: spec.seed,
        spec,
        splits,
    };
    std::fs::write(&a.out, serde_json::to_vec_pretty(&file)?)?;
    summary(json!({"out": a.out, "repeats": file.splits.len(), "seed": file.seed}));
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult {
    let rows: Vec<PredictionRow> = read_csv(&a.pred)?;
    let pred = PredictionTable::from_rows(&rows);
    let gt = read_mois(&a.gt)?;
    let splits = match &a.splits {
        Some(p) => {
            let f: SplitsFile = serde_json::from_slice(&std::fs::read(p)?)?;
            f.splits
        }
        None => {
            let ids: Vec<String> = gt.iter().map(|r| r.image_id.clone()).collect();
            make_splits(&ids, &a.split.spec())?
        }
    };
    let report = evaluate(&pred, &gt, &splits)?;
    emit(a.out.as_deref(), &metric_report_csv(&report.per_split, &report.median))
}

fn predict(a: PredictArgs) -> CliResult {
    let spec = parse_kernel(&a.kernel)?;
    let threads = a
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let (oracle, ids): (Box<dyn QualityOracle>, Vec<String>) = match (&a.scores, &a.command) {
        (Some(p), _) => {
            let o = ScoresFileOracle::from_csv(p)?;
            let ids = match &a.corpus {
                Some(c) => CorpusManifest::read(c)?.ids(),
                None => o.curves().into_iter().map(|c| c.image_id).collect(),
            };
            (Box::new(o), ids)
        }
        (None, Some(cmd)) => {
            let corpus = CorpusManifest::read(a.corpus.as_ref().expect("required by clap"))?;
            let ids = corpus.ids();
            (Box::new(CommandOracle::new(cmd, corpus, spec)?), ids)
        }
        _ => return Err(CliError::new("usage", "--scores or --command is required")),
    };
    let table = predict_corpus(&ids, oracle.as_ref(), a.grid, threads)?;
    write_csv(&a.out, &table.rows())?;
    summary(json!({"out": a.out, "images": table.predictions.len(), "grid": a.grid}));
    Ok(())
}

fn sensitivity(a: SensitivityArgs) -> CliResult {
    let reports = match (&a.pairs, a.delta_s, a.delta_q) {
        (Some(p), _, _) => iisa::stats::sensitivity_table(&read_sensitivity_pairs(p)?, a.cutoff),
        (None, Some(ds), Some(dq)) => vec![leverage(ds, dq)?],
        _ => return Err(CliError::new("usage", "--pairs or --delta-s with --delta-q is required")),
    };
    emit(a.out.as_deref(), &sensitivity_csv(&reports))
}

fn concavity(a: ConcavityArgs) -> CliResult {
    let rows: Vec<RatingRow> = read_csv(&a.ratings)?;
    let mut by_image: BTreeMap<String, BTreeMap<i64, (f64, Vec<f64>)>> = BTreeMap::new();
    for r in rows {
        by_image
            .entry(r.image_id)
            .or_default()
            .entry((r.scale * 1e6).round() as i64)
            .or_insert_with(|| (r.scale, Vec::new()))
            .1
            .push(r.rating);
    }
    let mut out = String::from("image_id,classification,violation_probability,seed\n");
    for (id, scales) in by_image {
        let pools: Vec<RatingPool> = scales
            .into_values()
            .map(|(scale, ratings)| RatingPool { scale, ratings })
            .collect();
        let means: Vec<(f64, f64)> = pools
            .iter()
            .map(|p| (p.scale, p.ratings.iter().sum::<f64>() / p.ratings.len() as f64))
            .collect();
        let class = check_concavity(&means)?;
        let seed = iisa::seed::derive_seed(a.seed, &["concavity", &id]);
        let p = concavity_violation_probability(&pools, a.resamples, seed)?;
        let label = serde_json::to_value(class)?;
        out.push_str(&format!("{id},{},{p},{}\n", label.as_str().unwrap_or_default(), a.seed));
    }
    emit(a.out.as_deref(), &out)
}
