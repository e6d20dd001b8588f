use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabelKind, LabeledDataset};
use crate::math;

/// Disjoint train/test partition, both labelled by word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Stratified split of one speaker's takes: each word contributes
/// `round(n * train_frac)` (clamped to `1..n`) takes to training.
pub fn split_person_based(ds: &LabeledDataset, speaker: &str, train_frac: f64, seed: u64) -> Result<Split, ClassifierError> {
    if !ds.has_speaker(speaker) {
        return Err(ClassifierError::UnknownSpeaker(speaker.into()));
    }
    stratified(&ds.for_speaker(speaker), train_frac, seed)
}

/// Stratified split over all speakers pooled, one stratum per word.
pub fn split_general(ds: &LabeledDataset, train_frac: f64, seed: u64) -> Result<Split, ClassifierError> {
    stratified(ds, train_frac, seed)
}

fn stratified(ds: &LabeledDataset, train_frac: f64, seed: u64) -> Result<Split, ClassifierError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(ClassifierError::InvalidFraction);
    }
    let ds = ds.relabeled(LabelKind::Word);
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in ds.points().iter().enumerate() {
        strata.entry(p.word.as_str()).or_default().push(i);
    }
    if let Some((word, members)) = strata.iter().find(|(_, m)| m.len() < 2) {
        return Err(ClassifierError::InsufficientTakes {
            word: String::from(*word),
            count: members.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = alloc::vec![false; ds.len()];
    for members in strata.values_mut() {
        let n = members.len();
        let n_train = (math::round(n as f64 * train_frac) as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = ds
        .into_iter()
        .zip(in_train)
        .partition(|(_, t)| *t);
    Ok(Split {
        train: LabeledDataset::new(train.into_iter().map(|(p, _)| p).collect())?,
        test: LabeledDataset::new(test.into_iter().map(|(p, _)| p).collect())?,
    })
}
