use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabeledDataset};
use crate::features::euclidean;
use crate::ClipEmbedding;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Metric {
    #[default]
    Euclidean,
}

/// Result of one k-NN query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    /// Neighbour count per label among the k nearest.
    pub votes: BTreeMap<String, usize>,
    /// Mean distance to the neighbours that voted for `label`.
    pub mean_distance: f64,
    /// Indices into the training set, nearest first.
    pub neighbor_ids: Vec<usize>,
}

impl Prediction {
    /// Share of the k votes won by the predicted label.
    pub fn confidence(&self) -> f64 {
        let total: usize = self.votes.values().sum();
        if total == 0 {
            return 0.0;
        }
        self.votes.get(&self.label).copied().unwrap_or(0) as f64 / total as f64
    }
}

/// Exhaustive-scan k-NN classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    metric: Metric,
    training: LabeledDataset,
}

impl KnnModel {
    pub fn new(training: LabeledDataset, k: usize) -> Result<Self, ClassifierError> {
        if training.is_empty() {
            return Err(ClassifierError::EmptyModel);
        }
        if k == 0 || k > training.len() {
            return Err(ClassifierError::InvalidK { k, training: training.len() });
        }
        Ok(Self { k, metric: Metric::Euclidean, training })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn training(&self) -> &LabeledDataset {
        &self.training
    }

    /// Plurality vote of the k nearest training points.
    ///
    /// Equidistant points at the k-th place are taken in training order.
    /// Vote ties go to the label with the smaller mean neighbour distance,
    /// then to the lexicographically smaller label.
    pub fn predict(&self, query: &ClipEmbedding) -> Result<Prediction, ClassifierError> {
        let dim = self.training.dim().ok_or(ClassifierError::EmptyModel)?;
        if query.dim() != dim {
            return Err(ClassifierError::DimensionMismatch { expected: dim, got: query.dim() });
        }
        let points = self.training.points();
        let mut ranked: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (euclidean(query.values(), p.embedding.values()), i))
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        };
        if self.k < ranked.len() {
            ranked.select_nth_unstable_by(self.k - 1, by_distance);
            ranked.truncate(self.k);
        }
        ranked.sort_by(by_distance);

        let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for &(d, i) in &ranked {
            let entry = tally.entry(points[i].label.as_str()).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += d;
        }
        // BTreeMap iterates labels in ascending order, so a strict comparison
        // keeps the smaller label on a full tie.
        let mut best: Option<(&str, usize, f64)> = None;
        for (&label, &(count, sum)) in &tally {
            let mean = sum / count as f64;
            let better = match best {
                None => true,
                Some((_, bc, bm)) => count > bc || (count == bc && mean < bm),
            };
            if better {
                best = Some((label, count, mean));
            }
        }
        let (label, _, mean_distance) = best.expect("k >= 1 neighbours");
        Ok(Prediction {
            label: label.into(),
            votes: tally.iter().map(|(l, (c, _))| (String::from(*l), *c)).collect(),
            mean_distance,
            neighbor_ids: ranked.iter().map(|&(_, i)| i).collect(),
        })
    }
}
