//! k-nearest-neighbour classification over clip embeddings, confusion
//! matrices with one-vs-rest sensitivity/selectivity/specificity, and the
//! person-based and general train/test splits.

mod dataset;
mod knn;
mod metrics;
mod split;

use alloc::string::String;

use thiserror::Error;

pub use dataset::{LabelKind, LabeledDataset, Point};
pub use knn::{KnnModel, Metric, Prediction};
pub use metrics::{evaluate, metrics, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use split::{split_general, split_person_based, Split};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("embedding dimension {got} does not match {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model has no training points")]
    EmptyModel,
    #[error("k = {k} must satisfy 1 <= k <= {training} training points")]
    InvalidK { k: usize, training: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("confusion matrix shape does not match its label set")]
    MalformedMatrix,
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("word {word:?} has {count} takes; at least 2 are needed to split")]
    InsufficientTakes { word: String, count: usize },
    #[error("train fraction must lie strictly between 0 and 1")]
    InvalidFraction,
}
