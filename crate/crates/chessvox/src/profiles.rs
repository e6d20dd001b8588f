//! Speaker profiles, enrollment and model building.

use std::collections::BTreeMap;
use std::fs;
use std::io;

use chessvox_core::audio::{encode_wav, resample, validate_take, CANONICAL_SAMPLE_RATE};
use chessvox_core::classifier::{ClassifierError, KnnModel, LabelKind, LabeledDataset, Prediction};
use chessvox_core::features::{FeatureError, FeatureExtractor};
use chessvox_core::vocabulary::Vocabulary;
use chessvox_core::{AudioClip, TakeValidation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusLayout;

pub const DEFAULT_TAKES_PER_WORD: usize = 10;
pub const MIN_TAKES_PER_WORD: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", content = "detail", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProfileError {
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("speaker {0:?} already exists")]
    DuplicateSpeaker(String),
    #[error("speaker id {0:?} must be 1-64 ASCII letters, digits, '-' or '_'")]
    InvalidSpeakerId(String),
    #[error("takes per word must be at least {MIN_TAKES_PER_WORD}, got {0}")]
    TooFewTakes(usize),
    #[error("enrollment is already complete")]
    SessionComplete,
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

impl From<io::Error> for ProfileError {
    fn from(e: io::Error) -> Self {
        ProfileError::StorageFailure(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeRecord {
    /// Root-relative path of the stored WAV.
    pub path: String,
    pub duration: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    pub display_name: String,
    /// Free-text remark, e.g. that the speaker had a cold while recording.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub takes: BTreeMap<String, Vec<TakeRecord>>,
}

impl SpeakerProfile {
    pub fn new(speaker_id: impl Into<String>, display_name: impl Into<String>) -> Self {
        Self {
            speaker_id: speaker_id.into(),
            display_name: display_name.into(),
            note: None,
            takes: BTreeMap::new(),
        }
    }

    pub fn take_count(&self) -> usize {
        self.takes.values().map(Vec::len).sum()
    }

    /// Every vocabulary word has at least `min` takes.
    pub fn has_takes_for_all(&self, vocab: &Vocabulary, min: usize) -> bool {
        vocab.word_ids().all(|w| self.takes.get(w).map_or(0, Vec::len) >= min)
    }
}

pub fn validate_speaker_id(id: &str) -> Result<(), ProfileError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(ProfileError::InvalidSpeakerId(id.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ProfileIndex {
    profiles: BTreeMap<String, SpeakerProfile>,
}

/// Profiles persisted as a JSON index at the corpus root.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    layout: CorpusLayout,
    index: ProfileIndex,
}

impl ProfileStore {
    /// Opens (creating the root if needed) and reads the index if present.
    pub fn open(layout: CorpusLayout) -> Result<Self, ProfileError> {
        fs::create_dir_all(layout.root())?;
        let index = match fs::read(layout.index_path()) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| ProfileError::StorageFailure(e.to_string()))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => ProfileIndex::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self { layout, index })
    }

    pub fn layout(&self) -> &CorpusLayout {
        &self.layout
    }

    pub fn list(&self) -> impl Iterator<Item = &SpeakerProfile> {
        self.index.profiles.values()
    }

    pub fn get(&self, speaker_id: &str) -> Option<&SpeakerProfile> {
        self.index.profiles.get(speaker_id)
    }

    pub fn create(&mut self, speaker_id: &str, display_name: &str, note: Option<String>) -> Result<&SpeakerProfile, ProfileError> {
        validate_speaker_id(speaker_id)?;
        if self.index.profiles.contains_key(speaker_id) {
            return Err(ProfileError::DuplicateSpeaker(speaker_id.to_string()));
        }
        let mut profile = SpeakerProfile::new(speaker_id, display_name);
        profile.note = note;
        self.upsert(profile)?;
        Ok(&self.index.profiles[speaker_id])
    }

    /// Inserts or replaces a profile and saves the index. On failure the
    /// in-memory index is left as it was.
    pub fn upsert(&mut self, profile: SpeakerProfile) -> Result<(), ProfileError> {
        validate_speaker_id(&profile.speaker_id)?;
        let previous = self.index.profiles.insert(profile.speaker_id.clone(), profile.clone());
        if let Err(e) = self.save() {
            match previous {
                Some(p) => self.index.profiles.insert(p.speaker_id.clone(), p),
                None => self.index.profiles.remove(&profile.speaker_id),
            };
            return Err(e);
        }
        Ok(())
    }

    fn save(&self) -> Result<(), ProfileError> {
        let json = serde_json::to_vec_pretty(&self.index).map_err(|e| ProfileError::StorageFailure(e.to_string()))?;
        let path = self.layout.index_path();
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, json)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Starts a fresh enrollment: the speaker's stored takes are deleted.
    pub fn begin_enrollment(&mut self, speaker_id: &str, vocab: &Vocabulary, takes_per_word: usize) -> Result<EnrollmentSession, ProfileError> {
        let session = EnrollmentSession::new(speaker_id, vocab, takes_per_word)?;
        let mut profile = self
            .get(speaker_id)
            .cloned()
            .ok_or_else(|| ProfileError::UnknownSpeaker(speaker_id.to_string()))?;
        let dir = self.layout.speaker_dir(speaker_id);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        profile.takes.clear();
        self.upsert(profile)?;
        Ok(session)
    }
}

/// Position of the next take: word index into the vocabulary order and
/// zero-based take index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub word: usize,
    pub take: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentSession {
    speaker_id: String,
    word_order: Vec<String>,
    cursor: Cursor,
    takes_per_word: usize,
}

impl EnrollmentSession {
    pub fn new(speaker_id: &str, vocab: &Vocabulary, takes_per_word: usize) -> Result<Self, ProfileError> {
        validate_speaker_id(speaker_id)?;
        if takes_per_word < MIN_TAKES_PER_WORD {
            return Err(ProfileError::TooFewTakes(takes_per_word));
        }
        Ok(Self {
            speaker_id: speaker_id.to_string(),
            word_order: vocab.word_ids().map(str::to_string).collect(),
            cursor: Cursor { word: 0, take: 0 },
            takes_per_word,
        })
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn word_order(&self) -> &[String] {
        &self.word_order
    }

    pub fn cursor(&self) -> Cursor {
        self.cursor
    }

    pub fn takes_per_word(&self) -> usize {
        self.takes_per_word
    }

    pub fn completed_takes(&self) -> usize {
        self.cursor.word * self.takes_per_word + self.cursor.take
    }

    pub fn total_takes(&self) -> usize {
        self.word_order.len() * self.takes_per_word
    }

    /// Completed share in `[0, 1]`.
    pub fn progress(&self) -> f64 {
        self.completed_takes() as f64 / self.total_takes() as f64
    }

    pub fn is_complete(&self) -> bool {
        self.cursor.word >= self.word_order.len()
    }

    /// The word the speaker should say next.
    pub fn current_word(&self) -> Option<&str> {
        self.word_order.get(self.cursor.word).map(String::as_str)
    }

    /// Validates the clip; an accepted take is stored at the cursor and the
    /// cursor advances. A rejected take changes nothing.
    pub fn submit_take(&mut self, store: &mut ProfileStore, clip: &AudioClip) -> Result<TakeValidation, ProfileError> {
        let word = self.current_word().ok_or(ProfileError::SessionComplete)?.to_string();
        let clip = resample(clip, CANONICAL_SAMPLE_RATE);
        let verdict = validate_take(&clip);
        if !verdict.accepted {
            return Ok(verdict);
        }
        let mut profile = store
            .get(&self.speaker_id)
            .cloned()
            .ok_or_else(|| ProfileError::UnknownSpeaker(self.speaker_id.clone()))?;
        let take_number = self.cursor.take + 1;
        let path = store.layout().take_path(&self.speaker_id, &word, take_number);
        store.layout().write_take(&path, &encode_wav(&clip))?;
        let records = profile.takes.entry(word).or_default();
        records.truncate(self.cursor.take);
        records.push(TakeRecord {
            path: store.layout().relative(&path),
            duration: clip.duration_seconds(),
            accepted: true,
        });
        if let Err(e) = store.upsert(profile) {
            let _ = fs::remove_file(&path);
            return Err(e);
        }
        self.cursor.take += 1;
        if self.cursor.take == self.takes_per_word {
            self.cursor = Cursor { word: self.cursor.word + 1, take: 0 };
        }
        Ok(verdict)
    }
}

/// Which training points a word model sees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "scope", content = "speaker_id", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelScope {
    /// Only the given speaker's takes.
    Person(String),
    /// Every speaker pooled.
    General,
}

pub fn build_word_model(ds: &LabeledDataset, scope: &ModelScope, k: usize) -> Result<KnnModel, ClassifierError> {
    let training = match scope {
        ModelScope::Person(speaker) => {
            if !ds.has_speaker(speaker) {
                return Err(ClassifierError::UnknownSpeaker(speaker.clone()));
            }
            ds.for_speaker(speaker)
        }
        ModelScope::General => ds.clone(),
    };
    KnnModel::new(training.relabeled(LabelKind::Word), k)
}

pub fn build_speaker_model(ds: &LabeledDataset, k: usize) -> Result<KnnModel, ClassifierError> {
    KnnModel::new(ds.relabeled(LabelKind::Speaker), k)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecognitionError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Predicts who spoke `clip` with a speaker-labelled model.
pub fn identify_speaker(model: &KnnModel, extractor: &FeatureExtractor, clip: &AudioClip) -> Result<Prediction, RecognitionError> {
    let embedding = extractor.embed_raw(clip)?;
    Ok(model.predict(&embedding)?)
}
