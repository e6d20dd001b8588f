use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, KnnModel, LabeledDataset};

/// Counts of true label (rows) against predicted label (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// All-zero matrix over a label set (sorted and deduplicated).
    pub fn zeros<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels
            .into_iter()
            .map(Into::into)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = labels.len();
        Self { labels, counts: vec![vec![0; n]; n] }
    }

    /// Matrix from explicit counts; labels keep the given order.
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, ClassifierError> {
        let n = labels.len();
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != n || counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(ClassifierError::MalformedMatrix);
        }
        Ok(Self { labels, counts })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Adds one observation. Returns false if either label is unknown.
    pub fn record(&mut self, truth: &str, predicted: &str) -> bool {
        match (self.index(truth), self.index(predicted)) {
            (Some(t), Some(p)) => {
                self.counts[t][p] += 1;
                true
            }
            _ => false,
        }
    }

    pub fn get(&self, truth: &str, predicted: &str) -> u64 {
        match (self.index(truth), self.index(predicted)) {
            (Some(t), Some(p)) => self.counts[t][p],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn column_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

/// Classifies every test point. The label set is the union of training and
/// test labels.
pub fn evaluate(model: &KnnModel, test: &LabeledDataset) -> Result<ConfusionMatrix, ClassifierError> {
    let labels = model.training().labels().into_iter().chain(test.labels());
    let mut cm = ConfusionMatrix::zeros(labels);
    for point in test.points() {
        let prediction = model.predict(&point.embedding)?;
        cm.record(&point.label, &prediction.label);
    }
    Ok(cm)
}

/// One-vs-rest figures for a class, percentages in `[0, 100]`.
///
/// A ratio whose denominator is zero is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub sen: Option<f64>,
    pub sel: Option<f64>,
    pub spe: Option<f64>,
}

/// Unweighted means over the classes where each figure is defined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroAverage {
    pub sen: Option<f64>,
    pub sel: Option<f64>,
    pub spe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub macro_avg: MacroAverage,
    /// `100 * trace / total`.
    pub overall: f64,
}

fn percent(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Sensitivity `TP/(TP+FN)`, selectivity `TP/(TP+FP)` and specificity
/// `TN/(TN+FP)` per class, their macro averages, and overall accuracy
/// `trace/total`.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, ClassifierError> {
    let total = cm.total();
    if total == 0 {
        return Err(ClassifierError::EmptyMatrix);
    }
    let per_class: BTreeMap<String, ClassMetrics> = cm
        .labels()
        .iter()
        .enumerate()
        .map(|(c, label)| {
            let tp = cm.counts()[c][c];
            let fn_ = cm.row_sum(c) - tp;
            let fp = cm.column_sum(c) - tp;
            let tn = total - tp - fn_ - fp;
            let m = ClassMetrics {
                tp,
                fn_,
                fp,
                tn,
                sen: percent(tp, tp + fn_),
                sel: percent(tp, tp + fp),
                spe: percent(tn, tn + fp),
            };
            (label.clone(), m)
        })
        .collect();
    let macro_avg = MacroAverage {
        sen: mean(per_class.values().map(|m| m.sen)),
        sel: mean(per_class.values().map(|m| m.sel)),
        spe: mean(per_class.values().map(|m| m.spe)),
    };
    Ok(MetricsReport {
        per_class,
        macro_avg,
        overall: 100.0 * cm.trace() as f64 / total as f64,
    })
}
