use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::ClipEmbedding;

/// Which attribute of a point is used as its class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Word,
    Speaker,
}

/// One embedded take. `id` identifies the source (usually its corpus path).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: String,
    pub embedding: ClipEmbedding,
    pub label: String,
    pub speaker: String,
    pub word: String,
}

impl Point {
    /// A point labelled by its word.
    pub fn word_labeled(id: impl Into<String>, embedding: ClipEmbedding, speaker: impl Into<String>, word: impl Into<String>) -> Self {
        let word = word.into();
        Self {
            id: id.into(),
            embedding,
            label: word.clone(),
            speaker: speaker.into(),
            word,
        }
    }
}

/// Embeddings of one dimension with their labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    points: Vec<Point>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Point>) -> Result<Self, ClassifierError> {
        let mut ds = Self::default();
        for p in points {
            ds.push(p)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, point: Point) -> Result<(), ClassifierError> {
        if let Some(first) = self.points.first() {
            if first.embedding.dim() != point.embedding.dim() {
                return Err(ClassifierError::DimensionMismatch {
                    expected: first.embedding.dim(),
                    got: point.embedding.dim(),
                });
            }
        }
        self.points.push(point);
        Ok(())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.embedding.dim())
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.points.iter().map(|p| p.label.clone()).collect()
    }

    pub fn speakers(&self) -> BTreeSet<String> {
        self.points.iter().map(|p| p.speaker.clone()).collect()
    }

    pub fn words(&self) -> BTreeSet<String> {
        self.points.iter().map(|p| p.word.clone()).collect()
    }

    pub fn has_speaker(&self, speaker: &str) -> bool {
        self.points.iter().any(|p| p.speaker == speaker)
    }

    /// Copy with every label replaced by the chosen attribute.
    pub fn relabeled(&self, kind: LabelKind) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| Point {
                label: match kind {
                    LabelKind::Word => p.word.clone(),
                    LabelKind::Speaker => p.speaker.clone(),
                },
                ..p.clone()
            })
            .collect();
        Self { points }
    }

    /// Points of a single speaker, in their original order.
    pub fn for_speaker(&self, speaker: &str) -> Self {
        self.filtered(|p| p.speaker == speaker)
    }

    pub fn filtered(&self, keep: impl Fn(&Point) -> bool) -> Self {
        Self {
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.points.iter().map(|p| p.id.as_str()).collect()
    }
}

impl IntoIterator for LabeledDataset {
    type Item = Point;
    type IntoIter = alloc::vec::IntoIter<Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.into_iter()
    }
}
