//! Session manager: audio -> word -> grammar -> chess, plus enrollment.
//!
//! Each session sits behind its own mutex, so calls on one session are
//! serialized while different sessions proceed in parallel.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use chessvox_core::audio::{decode_wav, resample, validate_take, CANONICAL_SAMPLE_RATE};
use chessvox_core::chess::{ComputerPolicy, GameStatus};
use chessvox_core::classifier::{ClassifierError, KnnModel, LabeledDataset};
use chessvox_core::features::FeatureExtractor;
use chessvox_core::vocabulary::Vocabulary;
use chessvox_core::{CommandEvent, FeatureKind, TakeValidation};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::broadcast;

use crate::config::ServiceConfig;
use crate::corpus::{load_corpus_cached, CorpusLayout, SkippedFile};
use crate::profiles::{build_word_model, Cursor, EnrollmentSession, ModelScope, ProfileError, ProfileStore, MIN_TAKES_PER_WORD};
use crate::session::{Effects, GameMode, ParserSummary, SessionCore, SessionEvent, SessionSettings, StageError};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "error", content = "detail", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} is closed")]
    SessionClosed(String),
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("speaker {0:?} needs at least {MIN_TAKES_PER_WORD} accepted takes of every word")]
    InsufficientEnrollment(String),
    #[error("no enrollment in progress for {0:?}")]
    NoEnrollment(String),
    #[error("nothing is waiting for confirmation")]
    NoPending,
    #[error("no training data for this model")]
    EmptyModel,
    #[error("bad audio: {0}")]
    BadAudio(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("model: {0}")]
    Model(String),
    #[error("corpus: {0}")]
    Corpus(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "UNKNOWN_SESSION",
            ServiceError::SessionClosed(_) => "SESSION_CLOSED",
            ServiceError::UnknownSpeaker(_) => "UNKNOWN_SPEAKER",
            ServiceError::InsufficientEnrollment(_) => "INSUFFICIENT_ENROLLMENT",
            ServiceError::NoEnrollment(_) => "NO_ENROLLMENT",
            ServiceError::NoPending => "NO_PENDING",
            ServiceError::EmptyModel => "EMPTY_MODEL",
            ServiceError::BadAudio(_) => "BAD_AUDIO",
            ServiceError::Profile(ProfileError::UnknownSpeaker(_)) => "UNKNOWN_SPEAKER",
            ServiceError::Profile(ProfileError::DuplicateSpeaker(_)) => "DUPLICATE_SPEAKER",
            ServiceError::Profile(ProfileError::InvalidSpeakerId(_)) => "INVALID_SPEAKER_ID",
            ServiceError::Profile(ProfileError::TooFewTakes(_)) => "CONFIG_INVALID",
            ServiceError::Profile(ProfileError::SessionComplete) => "SESSION_COMPLETE",
            ServiceError::Profile(ProfileError::StorageFailure(_)) => "STORAGE_FAILURE",
            ServiceError::Model(_) => "MODEL_UNAVAILABLE",
            ServiceError::Corpus(_) => "CORPUS_ERROR",
        }
    }
}

/// Body of `POST /sessions`. Unset fields take the service defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub mode: GameMode,
    pub play_method: ModelScope,
    #[serde(default)]
    pub feature_kind: Option<FeatureKind>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub confirm_moves: Option<bool>,
    #[serde(default)]
    pub computer: Option<ComputerPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recognized {
    pub word_id: String,
    /// Share of the k neighbours that voted for the word.
    pub confidence: f64,
    pub votes: BTreeMap<String, usize>,
    pub mean_distance: f64,
}

/// Response to one audio submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionOutcome {
    pub session_id: String,
    pub validation: Option<TakeValidation>,
    pub recognized: Option<Recognized>,
    pub parser: ParserSummary,
    pub commands: Vec<CommandEvent>,
    pub applied: Vec<chessvox_core::chess::ApplyResult>,
    pub pending: Option<CommandEvent>,
    pub computer_reply: Option<String>,
    pub errors: Vec<StageError>,
    pub fen: String,
    pub status: GameStatus,
    pub closed: bool,
}

/// Response to `POST /sessions/{id}/confirm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmOutcome {
    pub session_id: String,
    pub accepted: bool,
    pub effects: Effects,
    pub fen: String,
    pub status: GameStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub settings: SessionSettings,
    pub fen: String,
    pub status: GameStatus,
    pub legal_moves: Vec<String>,
    pub parser: ParserSummary,
    pub pending: Option<CommandEvent>,
    pub closed: bool,
    pub state_hash: String,
    pub event_count: usize,
    /// The most recent events, oldest first.
    pub recent_events: Vec<SessionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentStatus {
    pub speaker_id: String,
    pub cursor: Cursor,
    pub current_word: Option<String>,
    pub completed_takes: usize,
    pub total_takes: usize,
    pub progress: f64,
    pub complete: bool,
}

impl EnrollmentStatus {
    fn of(session: &EnrollmentSession) -> Self {
        Self {
            speaker_id: session.speaker_id().to_string(),
            cursor: session.cursor(),
            current_word: session.current_word().map(str::to_string),
            completed_takes: session.completed_takes(),
            total_takes: session.total_takes(),
            progress: session.progress(),
            complete: session.is_complete(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeOutcome {
    pub validation: TakeValidation,
    pub enrollment: EnrollmentStatus,
}

/// Body of `POST /profiles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateProfile {
    pub speaker_id: String,
    pub display_name: String,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub takes_per_word: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub speaker_id: String,
    pub display_name: String,
    pub note: Option<String>,
    pub take_count: usize,
    /// Enough takes of every word to build a personal model.
    pub ready: bool,
    pub enrollment: Option<EnrollmentStatus>,
}

struct SessionSlot {
    session: Mutex<LiveSession>,
    events: broadcast::Sender<SessionEvent>,
}

struct LiveSession {
    id: String,
    core: SessionCore,
    model: Arc<KnnModel>,
    extractor: Arc<FeatureExtractor>,
}

impl LiveSession {
    /// Broadcasts the events appended since `from`.
    fn publish(&self, from: usize, tx: &broadcast::Sender<SessionEvent>) {
        for event in &self.core.events()[from..] {
            let _ = tx.send(event.clone());
        }
    }
}

type ModelKey = (FeatureKind, ModelScope, usize);

pub struct Service {
    config: ServiceConfig,
    vocab: Vocabulary,
    extractors: BTreeMap<FeatureKind, Arc<FeatureExtractor>>,
    store: Mutex<ProfileStore>,
    datasets: Mutex<HashMap<FeatureKind, Arc<LabeledDataset>>>,
    models: Mutex<HashMap<ModelKey, Arc<KnnModel>>>,
    enrollments: Mutex<HashMap<String, Arc<Mutex<EnrollmentSession>>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
}

const EVENT_CHANNEL: usize = 256;

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Service {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        let store = ProfileStore::open(CorpusLayout::new(&config.corpus_root))?;
        let extractors = FeatureKind::ALL.iter().map(|&k| (k, Arc::new(FeatureExtractor::standard(k)))).collect();
        Ok(Self {
            config,
            vocab: Vocabulary::standard(),
            extractors,
            store: Mutex::new(store),
            datasets: Mutex::new(HashMap::new()),
            models: Mutex::new(HashMap::new()),
            enrollments: Mutex::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// The word-labelled corpus for `kind`, loaded once and kept until an
    /// enrollment changes the corpus.
    pub fn dataset(&self, kind: FeatureKind) -> Result<(Arc<LabeledDataset>, Vec<SkippedFile>), ServiceError> {
        if let Some(ds) = lock(&self.datasets).get(&kind) {
            return Ok((ds.clone(), Vec::new()));
        }
        let layout = CorpusLayout::new(&self.config.corpus_root);
        let load = load_corpus_cached(&layout, &self.extractors[&kind]).map_err(|e| ServiceError::Corpus(e.to_string()))?;
        let ds = Arc::new(load.dataset);
        lock(&self.datasets).insert(kind, ds.clone());
        Ok((ds, load.skipped))
    }

    fn invalidate_models(&self) {
        lock(&self.datasets).clear();
        lock(&self.models).clear();
    }

    fn model(&self, kind: FeatureKind, scope: &ModelScope, k: usize) -> Result<Arc<KnnModel>, ServiceError> {
        let key = (kind, scope.clone(), k);
        if let Some(m) = lock(&self.models).get(&key) {
            return Ok(m.clone());
        }
        let (ds, _) = self.dataset(kind)?;
        let model = build_word_model(&ds, scope, k).map_err(|e| match e {
            ClassifierError::UnknownSpeaker(s) => ServiceError::InsufficientEnrollment(s),
            ClassifierError::EmptyModel => ServiceError::EmptyModel,
            other => ServiceError::Model(other.to_string()),
        })?;
        let model = Arc::new(model);
        lock(&self.models).insert(key, model.clone());
        Ok(model)
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionSnapshot, ServiceError> {
        if let ModelScope::Person(speaker) = &req.play_method {
            let store = lock(&self.store);
            let profile = store.get(speaker).ok_or_else(|| ServiceError::UnknownSpeaker(speaker.clone()))?;
            if !profile.has_takes_for_all(&self.vocab, MIN_TAKES_PER_WORD) {
                return Err(ServiceError::InsufficientEnrollment(speaker.clone()));
            }
        }
        let settings = SessionSettings {
            mode: req.mode,
            feature_kind: req.feature_kind.unwrap_or(self.config.feature_kind),
            k: req.k.unwrap_or(self.config.k),
            confirm_moves: req.confirm_moves.unwrap_or(self.config.confirm_moves),
            computer: req.computer.unwrap_or(self.config.computer),
            play_method: req.play_method,
        };
        let model = self.model(settings.feature_kind, &settings.play_method, settings.k)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (tx, _) = broadcast::channel(EVENT_CHANNEL);
        let live = LiveSession {
            id: id.clone(),
            extractor: self.extractors[&settings.feature_kind].clone(),
            core: SessionCore::new(settings),
            model,
        };
        let snapshot = self.snapshot_of(&live);
        let slot = Arc::new(SessionSlot { session: Mutex::new(live), events: tx });
        self.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id, slot);
        Ok(snapshot)
    }

    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap_or_else(|p| p.into_inner()).keys().cloned().collect();
        ids.sort();
        ids
    }

    fn snapshot_of(&self, live: &LiveSession) -> SessionSnapshot {
        let core = &live.core;
        let events = core.events();
        let recent = events.len().saturating_sub(self.config.snapshot_events);
        SessionSnapshot {
            session_id: live.id.clone(),
            settings: core.settings().clone(),
            fen: core.game().to_fen(),
            status: core.game().status(),
            legal_moves: core.game().legal_moves().iter().map(|m| m.lan()).collect(),
            parser: ParserSummary::of(core.parser()),
            pending: core.pending().cloned(),
            closed: core.is_closed(),
            state_hash: core.state_hash(),
            event_count: events.len(),
            recent_events: events[recent..].to_vec(),
        }
    }

    pub fn get_state(&self, id: &str) -> Result<SessionSnapshot, ServiceError> {
        let slot = self.slot(id)?;
        let live = lock(&slot.session);
        Ok(self.snapshot_of(&live))
    }

    /// Full event log of a session.
    pub fn events(&self, id: &str) -> Result<Vec<SessionEvent>, ServiceError> {
        let slot = self.slot(id)?;
        let live = lock(&slot.session);
        Ok(live.core.events().to_vec())
    }

    /// The log so far plus a receiver for later events, taken atomically so
    /// nothing falls between the two.
    pub fn subscribe(&self, id: &str) -> Result<(Vec<SessionEvent>, broadcast::Receiver<SessionEvent>), ServiceError> {
        let slot = self.slot(id)?;
        let live = lock(&slot.session);
        Ok((live.core.events().to_vec(), slot.events.subscribe()))
    }

    /// Runs decode, validation, embedding and k-NN, then feeds the word.
    /// Stage failures are reported in the outcome; only the stages after
    /// recognition change the session.
    pub fn submit_audio(&self, id: &str, wav: &[u8]) -> Result<RecognitionOutcome, ServiceError> {
        let slot = self.slot(id)?;
        let mut live = lock(&slot.session);
        if live.core.is_closed() {
            return Err(ServiceError::SessionClosed(id.to_string()));
        }
        let start = live.core.events().len();
        let mut validation = None;
        let mut recognized = None;
        let fx = match self.recognize(&live, wav, &mut validation) {
            Err(error) => {
                live.core.reject_audio(error.clone());
                Effects { errors: vec![error], ..Effects::default() }
            }
            Ok(r) => {
                let fx = live.core.feed_word(&self.vocab, &r.word_id, r.confidence);
                recognized = Some(r);
                fx
            }
        };
        live.publish(start, &slot.events);
        let core = &live.core;
        Ok(RecognitionOutcome {
            session_id: id.to_string(),
            validation,
            recognized,
            parser: ParserSummary::of(core.parser()),
            commands: fx.commands,
            applied: fx.applied,
            pending: core.pending().cloned(),
            computer_reply: fx.computer_reply,
            errors: fx.errors,
            fen: core.game().to_fen(),
            status: core.game().status(),
            closed: core.is_closed(),
        })
    }

    fn recognize(&self, live: &LiveSession, wav: &[u8], validation: &mut Option<TakeValidation>) -> Result<Recognized, StageError> {
        if live.core.pending().is_some() {
            return Err(StageError::AwaitingConfirmation);
        }
        let clip = decode_wav(wav).map_err(|e| StageError::BadAudio { reason: None, detail: e.to_string() })?;
        let clip = resample(&clip, CANONICAL_SAMPLE_RATE);
        let verdict = validate_take(&clip);
        *validation = Some(verdict);
        if !verdict.accepted {
            return Err(StageError::rejected(verdict));
        }
        let embedding = live
            .extractor
            .embed_raw(&clip)
            .map_err(|e| StageError::FeatureFailure { detail: e.to_string() })?;
        let p = live
            .model
            .predict(&embedding)
            .map_err(|e| StageError::FeatureFailure { detail: e.to_string() })?;
        Ok(Recognized { confidence: p.confidence(), word_id: p.label, votes: p.votes, mean_distance: p.mean_distance })
    }

    pub fn confirm_pending(&self, id: &str, accept: bool) -> Result<ConfirmOutcome, ServiceError> {
        let slot = self.slot(id)?;
        let mut live = lock(&slot.session);
        if live.core.is_closed() {
            return Err(ServiceError::SessionClosed(id.to_string()));
        }
        let start = live.core.events().len();
        let effects = live.core.confirm(accept).ok_or(ServiceError::NoPending)?;
        live.publish(start, &slot.events);
        Ok(ConfirmOutcome {
            session_id: id.to_string(),
            accepted: accept,
            effects,
            fen: live.core.game().to_fen(),
            status: live.core.game().status(),
        })
    }

    /// Closes and forgets a session; returns its final snapshot.
    pub fn close_session(&self, id: &str) -> Result<SessionSnapshot, ServiceError> {
        let slot = self
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .remove(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))?;
        let mut live = lock(&slot.session);
        let start = live.core.events().len();
        live.core.close();
        live.publish(start, &slot.events);
        Ok(self.snapshot_of(&live))
    }

    pub fn create_profile(&self, req: CreateProfile) -> Result<ProfileSummary, ServiceError> {
        let takes = req.takes_per_word.unwrap_or(self.config.takes_per_word);
        let session = {
            let mut store = lock(&self.store);
            EnrollmentSession::new(&req.speaker_id, &self.vocab, takes)?;
            store.create(&req.speaker_id, &req.display_name, req.note.clone())?;
            store.begin_enrollment(&req.speaker_id, &self.vocab, takes)?
        };
        lock(&self.enrollments).insert(req.speaker_id.clone(), Arc::new(Mutex::new(session)));
        self.profile_summary(&req.speaker_id)
    }

    fn profile_summary(&self, speaker: &str) -> Result<ProfileSummary, ServiceError> {
        let enrollment = lock(&self.enrollments).get(speaker).map(|e| EnrollmentStatus::of(&lock(e)));
        let store = lock(&self.store);
        let p = store.get(speaker).ok_or_else(|| ServiceError::UnknownSpeaker(speaker.to_string()))?;
        Ok(ProfileSummary {
            speaker_id: p.speaker_id.clone(),
            display_name: p.display_name.clone(),
            note: p.note.clone(),
            take_count: p.take_count(),
            ready: p.has_takes_for_all(&self.vocab, MIN_TAKES_PER_WORD),
            enrollment,
        })
    }

    pub fn list_profiles(&self) -> Result<Vec<ProfileSummary>, ServiceError> {
        let ids: Vec<String> = lock(&self.store).list().map(|p| p.speaker_id.clone()).collect();
        ids.iter().map(|id| self.profile_summary(id)).collect()
    }

    /// Validates and stores one enrollment take for `speaker`.
    pub fn submit_take(&self, speaker: &str, wav: &[u8]) -> Result<TakeOutcome, ServiceError> {
        let enrollment = lock(&self.enrollments)
            .get(speaker)
            .cloned()
            .ok_or_else(|| ServiceError::NoEnrollment(speaker.to_string()))?;
        let mut session = lock(&enrollment);
        if session.is_complete() {
            return Err(ProfileError::SessionComplete.into());
        }
        let clip = decode_wav(wav).map_err(|e| ServiceError::BadAudio(e.to_string()))?;
        let validation = {
            let mut store = lock(&self.store);
            session.submit_take(&mut store, &clip)?
        };
        if validation.accepted {
            self.invalidate_models();
        }
        Ok(TakeOutcome { validation, enrollment: EnrollmentStatus::of(&session) })
    }
}
