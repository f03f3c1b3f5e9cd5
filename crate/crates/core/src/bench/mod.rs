//! Benchmark ingestion, batch runs with checkpointing, and metrics.

mod dataset;
mod metrics;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{detect, DetectionConfig, DetectionDeps, DetectionMode, PipelineError};
use crate::sync::bounded_map;

pub use dataset::{
    load_dataset, parse_dataset, parse_label, DatasetFormat, FieldMap, LoadOptions, DEFAULT_LABEL_THRESHOLD,
};
pub use metrics::{
    build_curve, compute_metrics, f1_score, metrics_from_confusion, trapezoid_auc, CurveData, CurveKind, CurvePoint,
    MetricsReport,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("record {index}: {message}")]
    Format { index: usize, message: String },
    #[error("record {index}: unknown label {label:?}")]
    UnknownLabel { index: usize, label: String },
    #[error("no examples to evaluate")]
    EmptyInput,
    #[error("curve needs both classes (PR: at least one positive)")]
    SingleClass,
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldLabel {
    Hallucinated,
    Consistent,
}

impl GoldLabel {
    pub fn is_positive(self) -> bool {
        self == GoldLabel::Hallucinated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkExample {
    pub id: String,
    /// Present for closed-domain examples only.
    pub source_text: Option<String>,
    pub generated_text: String,
    pub gold_label: GoldLabel,
    /// Original annotation on a `[0, 1]` scale, when numeric.
    pub raw_score: Option<f64>,
}

/// One line of the verdict log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub id: String,
    pub gold_label: GoldLabel,
    pub score: Option<f64>,
    pub threshold: f64,
    pub is_hallucination: Option<bool>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub explanation: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BenchOptions {
    pub workers: usize,
    /// Append-only verdict log; ids already present are not re-run.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    /// Metrics over examples that produced a score; `None` if none did.
    pub report: Option<MetricsReport>,
    pub roc: Option<CurveData>,
    pub pr: Option<CurveData>,
    /// In dataset order.
    pub verdicts: Vec<VerdictRecord>,
    pub error_rate: f64,
}

/// Summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub examples: usize,
    pub threshold: f64,
    pub error_rate: f64,
    pub metrics: Option<MetricsReport>,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
}

impl BenchOutcome {
    pub fn summary(&self, threshold: f64) -> BenchSummary {
        BenchSummary {
            examples: self.verdicts.len(),
            threshold,
            error_rate: self.error_rate,
            metrics: self.report.clone(),
            roc_auc: self.roc.as_ref().map(|c| c.auc),
            pr_auc: self.pr.as_ref().map(|c| c.auc),
        }
    }
}

fn check_mode(dataset: &[BenchmarkExample], cfg: &DetectionConfig, deps: &DetectionDeps<'_>) -> Result<(), BenchError> {
    cfg.validate().map_err(|e| BenchError::Config(e.to_string()))?;
    if cfg.mode == DetectionMode::OpenDomain && deps.grounding.is_none() {
        return Err(BenchError::Config(PipelineError::MissingGrounding.to_string()));
    }
    for ex in dataset {
        match (cfg.mode, &ex.source_text) {
            (DetectionMode::ClosedDomain, None) => {
                return Err(BenchError::Config(format!(
                    "closed-domain run but example {:?} has no source text",
                    ex.id
                )))
            }
            (DetectionMode::OpenDomain, Some(_)) => {
                return Err(BenchError::Config(format!(
                    "open-domain run but example {:?} carries source text",
                    ex.id
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn read_verdict_log(path: &Path) -> Result<Vec<VerdictRecord>, BenchError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            // A torn final line from an interrupted write is dropped.
            Err(e) => log::warn!("{}:{}: skipping unreadable verdict: {e}", path.display(), index + 1),
        }
    }
    Ok(out)
}

fn run_one(ex: &BenchmarkExample, cfg: &DetectionConfig, deps: &DetectionDeps<'_>) -> VerdictRecord {
    let result = detect(&ex.generated_text, ex.source_text.as_deref(), cfg, deps);
    match result {
        Ok(v) => VerdictRecord {
            id: ex.id.clone(),
            gold_label: ex.gold_label,
            score: Some(v.score),
            threshold: v.threshold,
            is_hallucination: Some(v.is_hallucination),
            warnings: v.warnings,
            explanation: v.explanation.map(|e| e.text),
            error: None,
        },
        Err(e) => VerdictRecord {
            id: ex.id.clone(),
            gold_label: ex.gold_label,
            score: None,
            threshold: cfg.kernel_threshold,
            is_hallucination: None,
            warnings: Vec::new(),
            explanation: None,
            error: Some(e.to_string()),
        },
    }
}

/// Metrics and curves from logged scores, re-thresholded at `threshold`.
pub fn evaluate_records(records: &[VerdictRecord], threshold: f64) -> BenchOutcome {
    let mut verdicts = records.to_vec();
    for r in &mut verdicts {
        if let Some(s) = r.score {
            r.threshold = threshold;
            r.is_hallucination = Some(s < threshold);
        }
    }
    let scored: Vec<(f64, GoldLabel)> = verdicts
        .iter()
        .filter_map(|r| r.score.map(|s| (s, r.gold_label)))
        .collect();
    let predicted: Vec<(bool, GoldLabel)> = scored.iter().map(|&(s, g)| (s < threshold, g)).collect();
    let errors = verdicts.len() - scored.len();
    BenchOutcome {
        report: compute_metrics(&predicted).ok(),
        roc: build_curve(&scored, CurveKind::Roc).ok(),
        pr: build_curve(&scored, CurveKind::Pr).ok(),
        error_rate: if verdicts.is_empty() {
            0.0
        } else {
            errors as f64 / verdicts.len() as f64
        },
        verdicts,
    }
}

/// Runs detection over every example with a bounded worker pool. Per-example
/// failures are logged and counted; configuration problems abort before any
/// example runs.
pub fn run_benchmark(
    dataset: &[BenchmarkExample],
    cfg: &DetectionConfig,
    deps: &DetectionDeps<'_>,
    options: &BenchOptions,
) -> Result<BenchOutcome, BenchError> {
    check_mode(dataset, cfg, deps)?;
    let mut done: HashMap<String, VerdictRecord> = HashMap::new();
    let mut log = None;
    if let Some(path) = &options.checkpoint {
        for r in read_verdict_log(path)? {
            done.insert(r.id.clone(), r);
        }
        log = Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path)?));
    }
    let pending: Vec<&BenchmarkExample> = dataset.iter().filter(|ex| !done.contains_key(&ex.id)).collect();
    log::info!(
        "{} examples to run, {} restored from checkpoint",
        pending.len(),
        dataset.len() - pending.len()
    );
    let write_failed = Mutex::new(None);
    let fresh = bounded_map(&pending, options.workers.max(1), |_, ex| {
        let record = run_one(ex, cfg, deps);
        if let Some(log) = &log {
            let line = serde_json::to_string(&record).expect("verdict serializes");
            let mut f = log.lock().unwrap_or_else(|e| e.into_inner());
            if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                write_failed
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .get_or_insert(e.to_string());
            }
        }
        record
    });
    if let Some(e) = write_failed.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(BenchError::Io(format!("checkpoint write failed: {e}")));
    }
    for r in fresh {
        done.insert(r.id.clone(), r);
    }
    let ordered: Vec<VerdictRecord> = dataset
        .iter()
        .map(|ex| done.remove(&ex.id).expect("every id ran"))
        .collect();
    Ok(evaluate_records(&ordered, cfg.kernel_threshold))
}

/// Writes `report.json`, `verdicts.jsonl`, and `roc.csv` / `pr.csv` when
/// those curves exist.
pub fn write_outputs(dir: &Path, outcome: &BenchOutcome, threshold: f64) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    let summary = serde_json::to_string_pretty(&outcome.summary(threshold)).expect("summary serializes");
    std::fs::write(dir.join("report.json"), summary + "\n")?;
    let mut log = String::new();
    for r in &outcome.verdicts {
        log.push_str(&serde_json::to_string(r).expect("verdict serializes"));
        log.push('\n');
    }
    std::fs::write(dir.join("verdicts.jsonl"), log)?;
    for (curve, name) in [(&outcome.roc, "roc.csv"), (&outcome.pr, "pr.csv")] {
        match curve {
            Some(c) => std::fs::write(dir.join(name), c.to_csv())?,
            None => log::warn!("{name} not written: curve undefined for these labels"),
        }
    }
    Ok(())
}

/// Random subsample of `n` units in dataset order. A unit is one example,
/// or with `by_passage` every example sharing the id prefix before `:`.
/// Example units are stratified by gold label with largest-remainder
/// allocation; passage units are drawn uniformly.
pub fn subsample(dataset: &[BenchmarkExample], n: usize, seed: u64, by_passage: bool) -> Vec<BenchmarkExample> {
    let mut units: Vec<Vec<usize>> = Vec::new();
    let mut by_key: HashMap<&str, usize> = HashMap::new();
    for (i, ex) in dataset.iter().enumerate() {
        if by_passage {
            let key = ex.id.split(':').next().unwrap_or(&ex.id);
            let unit = *by_key.entry(key).or_insert_with(|| {
                units.push(Vec::new());
                units.len() - 1
            });
            units[unit].push(i);
        } else {
            units.push(vec![i]);
        }
    }
    if n >= units.len() {
        return dataset.to_vec();
    }
    let mut strata: Vec<Vec<usize>> = if by_passage {
        vec![(0..units.len()).collect()]
    } else {
        let positive = |u: &usize| dataset[units[*u][0]].gold_label.is_positive();
        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..units.len()).partition(positive);
        vec![pos, neg]
    };
    let total = units.len() as f64;
    let exact: Vec<f64> = strata.iter().map(|s| s.len() as f64 * n as f64 / total).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..strata.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &s in order.iter().cycle().take(n - quota.iter().sum::<usize>()) {
        quota[s] += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for (stratum, k) in strata.iter_mut().zip(quota) {
        stratum.shuffle(&mut rng);
        chosen.extend(stratum.iter().take(k));
    }
    chosen.sort_unstable();
    chosen
        .into_iter()
        .flat_map(|u| units[u].iter().map(|&i| dataset[i].clone()))
        .collect()
}
