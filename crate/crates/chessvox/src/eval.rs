//! Experiment harness: person-based and general k-NN evaluation over a
//! corpus, per-subject SEN/SEL/SPE tables and feature comparisons.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chessvox_core::classifier::{
    evaluate, metrics, split_general, split_person_based, ClassifierError, ConfusionMatrix, KnnModel, LabeledDataset,
    MetricsReport, Split,
};
use chessvox_core::features::FeatureExtractor;
use chessvox_core::FeatureKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{load_corpus_cached, load_corpus_with, CorpusError, CorpusLayout, SkippedFile};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{kind} {scope:?} {subject}: {source}")]
    Classifier {
        kind: FeatureKind,
        scope: EvalScope,
        subject: String,
        source: ClassifierError,
    },
    #[error("splits differ between feature kinds for {0}")]
    SplitMismatch(String),
    #[error("writing reports: {0}")]
    Io(#[from] std::io::Error),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalScope {
    /// One model per speaker, trained and tested on that speaker's takes.
    PerSpeaker,
    /// One model over all speakers pooled.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub corpus_root: PathBuf,
    pub kinds: Vec<FeatureKind>,
    pub k_values: Vec<usize>,
    pub train_frac: f64,
    pub seed: u64,
    pub scopes: Vec<EvalScope>,
    /// Where `eval.json` and `eval.txt` go; nothing is written when unset.
    pub output_dir: Option<PathBuf>,
    /// Reuse embeddings cached under the corpus root.
    pub use_cache: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            corpus_root: PathBuf::from("corpus"),
            kinds: vec![FeatureKind::Gammatone],
            k_values: vec![1],
            train_frac: 0.7,
            seed: 42,
            scopes: vec![EvalScope::PerSpeaker, EvalScope::General],
            output_dir: None,
            use_cache: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::ConfigInvalid(m.to_string()));
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad("train_frac must lie strictly between 0 and 1");
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return bad("k values must be non-empty and at least 1");
        }
        if self.kinds.is_empty() {
            return bad("at least one feature kind is required");
        }
        if self.scopes.is_empty() {
            return bad("at least one scope is required");
        }
        Ok(())
    }
}

/// Macro-averaged SEN/SEL/SPE for one subject (or the pooled model).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TableRow {
    pub sen: Option<f64>,
    pub sel: Option<f64>,
    pub spe: Option<f64>,
}

impl TableRow {
    fn from_report(report: &MetricsReport) -> Self {
        Self {
            sen: report.macro_avg.sen,
            sel: report.macro_avg.sel,
            spe: report.macro_avg.spe,
        }
    }
}

/// Two-decimal rounding as printed in the tables.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn mean_rounded(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().map(round2).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectResult {
    /// Speaker id, or `all` for the pooled model.
    pub subject: String,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub row: TableRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: FeatureKind,
    pub k: usize,
    pub scope: EvalScope,
    pub subjects: Vec<SubjectResult>,
    /// Mean of the subject rows after rounding each to two decimals.
    pub average: TableRow,
    /// Overall accuracy; for per-speaker runs the unweighted mean over
    /// subjects.
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    /// Points loaded per feature kind.
    pub points: BTreeMap<FeatureKind, usize>,
    pub skipped: BTreeMap<FeatureKind, Vec<SkippedFile>>,
    pub runs: Vec<RunReport>,
}

const POOLED: &str = "all";

fn ids(ds: &LabeledDataset) -> Vec<String> {
    ds.ids().into_iter().map(str::to_string).collect()
}

fn run_subject(ds: &LabeledDataset, kind: FeatureKind, k: usize, scope: EvalScope, subject: &str, cfg: &EvalConfig) -> Result<SubjectResult, EvalError> {
    let wrap = |source| EvalError::Classifier { kind, scope, subject: subject.to_string(), source };
    let split: Split = match scope {
        EvalScope::PerSpeaker => split_person_based(ds, subject, cfg.train_frac, cfg.seed),
        EvalScope::General => split_general(ds, cfg.train_frac, cfg.seed),
    }
    .map_err(wrap)?;
    let train_ids = ids(&split.train);
    let test_ids = ids(&split.test);
    let model = KnnModel::new(split.train, k).map_err(wrap)?;
    let confusion = evaluate(&model, &split.test).map_err(wrap)?;
    let report = metrics(&confusion).map_err(wrap)?;
    Ok(SubjectResult {
        subject: subject.to_string(),
        train_ids,
        test_ids,
        confusion,
        row: TableRow::from_report(&report),
        metrics: report,
    })
}

fn assemble(kind: FeatureKind, k: usize, scope: EvalScope, subjects: Vec<SubjectResult>) -> RunReport {
    let average = TableRow {
        sen: mean_rounded(subjects.iter().map(|s| s.row.sen)),
        sel: mean_rounded(subjects.iter().map(|s| s.row.sel)),
        spe: mean_rounded(subjects.iter().map(|s| s.row.spe)),
    };
    let overall = subjects.iter().map(|s| s.metrics.overall).sum::<f64>() / subjects.len().max(1) as f64;
    RunReport { kind, k, scope, subjects, average, overall }
}

/// Runs every kind x scope x k combination. The result depends only on the
/// configuration and the corpus contents.
pub fn run_eval(cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    let layout = CorpusLayout::new(&cfg.corpus_root);
    let mut datasets = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for &kind in &cfg.kinds {
        let extractor = FeatureExtractor::standard(kind);
        let load = if cfg.use_cache {
            load_corpus_cached(&layout, &extractor)?
        } else {
            load_corpus_with(&layout, &extractor, None)?
        };
        skipped.insert(kind, load.skipped);
        datasets.insert(kind, load.dataset);
    }

    let mut jobs = Vec::new();
    for &kind in &cfg.kinds {
        for &scope in &cfg.scopes {
            for &k in &cfg.k_values {
                let subjects: Vec<String> = match scope {
                    EvalScope::PerSpeaker => datasets[&kind].speakers().into_iter().collect(),
                    EvalScope::General => vec![POOLED.to_string()],
                };
                jobs.push((kind, scope, k, subjects));
            }
        }
    }
    let runs = jobs
        .into_par_iter()
        .map(|(kind, scope, k, subjects)| {
            let ds = &datasets[&kind];
            let results = subjects
                .par_iter()
                .map(|s| run_subject(ds, kind, k, scope, s, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(assemble(kind, k, scope, results))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    Ok(EvalReport {
        config: cfg.clone(),
        points: datasets.iter().map(|(k, d)| (*k, d.len())).collect(),
        skipped,
        runs,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Plain-text tables: one row per subject with SEN, SEL, SPE, a final
/// Average row, and a summary line for each general run.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    for run in &report.runs {
        let name = run.kind.acronym();
        match run.scope {
            EvalScope::PerSpeaker => {
                let _ = writeln!(out, "Average Result of Person-Based Classification ({name}, k={})", run.k);
                let _ = writeln!(out, "{:<10} {:>7} {:>7} {:>7}", "Subject", "SEN", "SEL", "SPE");
                for (i, s) in run.subjects.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{:<10} {:>7} {:>7} {:>7}",
                        i + 1,
                        cell(s.row.sen),
                        cell(s.row.sel),
                        cell(s.row.spe)
                    );
                }
                let a = run.average;
                let _ = writeln!(out, "{:<10} {:>7} {:>7} {:>7}", "Average", cell(a.sen), cell(a.sel), cell(a.spe));
                let legend: Vec<String> = run.subjects.iter().enumerate().map(|(i, s)| format!("{}={}", i + 1, s.subject)).collect();
                let _ = writeln!(out, "Subjects: {}", legend.join(" "));
            }
            EvalScope::General => {
                let s = &run.subjects[0];
                let _ = writeln!(
                    out,
                    "General classification ({name}, k={}): overall accuracy {:.2}% ({}/{}), SEN {} SEL {} SPE {}",
                    run.k,
                    run.overall,
                    s.confusion.trace(),
                    s.confusion.total(),
                    cell(s.row.sen),
                    cell(s.row.sel),
                    cell(s.row.spe)
                );
            }
        }
        out.push('\n');
    }
    out
}

pub const JSON_REPORT: &str = "eval.json";
pub const TEXT_REPORT: &str = "eval.txt";

pub fn report_json(report: &EvalReport) -> Result<String, EvalError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Writes `eval.json` and `eval.txt` into `dir`.
pub fn write_reports(report: &EvalReport, dir: &Path) -> Result<(PathBuf, PathBuf), EvalError> {
    fs::create_dir_all(dir)?;
    let json = dir.join(JSON_REPORT);
    let text = dir.join(TEXT_REPORT);
    fs::write(&json, report_json(report)?)?;
    fs::write(&text, render_text(report))?;
    Ok((json, text))
}

pub fn read_report(path: &Path) -> Result<EvalReport, EvalError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub scope: EvalScope,
    pub k: usize,
    pub mfcc: f64,
    pub gtcc: f64,
    /// `gtcc - mfcc`, in percentage points.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub entries: Vec<ComparisonEntry>,
    pub report: EvalReport,
}

fn find(report: &EvalReport, kind: FeatureKind, scope: EvalScope, k: usize) -> Option<&RunReport> {
    report.runs.iter().find(|r| r.kind == kind && r.scope == scope && r.k == k)
}

/// Differences between the two feature kinds from one report, checking that
/// both saw the same splits.
pub fn compare_runs(report: &EvalReport) -> Result<Vec<ComparisonEntry>, EvalError> {
    let mut entries = Vec::new();
    for &scope in &report.config.scopes {
        for &k in &report.config.k_values {
            let (Some(m), Some(g)) = (
                find(report, FeatureKind::Mel, scope, k),
                find(report, FeatureKind::Gammatone, scope, k),
            ) else {
                continue;
            };
            let same = m.subjects.len() == g.subjects.len()
                && m.subjects.iter().zip(&g.subjects).all(|(a, b)| {
                    a.subject == b.subject && a.train_ids == b.train_ids && a.test_ids == b.test_ids
                });
            if !same {
                return Err(EvalError::SplitMismatch(format!("{scope:?} k={k}")));
            }
            entries.push(ComparisonEntry { scope, k, mfcc: m.overall, gtcc: g.overall, delta: g.overall - m.overall });
        }
    }
    Ok(entries)
}

/// Runs both feature kinds on identical splits and reports the accuracy
/// differences.
pub fn compare_features(cfg: &EvalConfig) -> Result<Comparison, EvalError> {
    let mut cfg = cfg.clone();
    cfg.kinds = vec![FeatureKind::Mel, FeatureKind::Gammatone];
    let report = run_eval(&cfg)?;
    let entries = compare_runs(&report)?;
    Ok(Comparison { entries, report })
}

pub fn render_comparison(entries: &[ComparisonEntry]) -> String {
    let mut out = String::from("Scope        k     MFCC     GTCC  GTCC-MFCC\n");
    for e in entries {
        let scope = match e.scope {
            EvalScope::PerSpeaker => "per-speaker",
            EvalScope::General => "general",
        };
        let _ = writeln!(out, "{:<11} {:>2} {:>8.2} {:>8.2} {:>+10.2}", scope, e.k, e.mfcc, e.gtcc, e.delta);
    }
    out
}
