//! Per-session game logic driven by recognised words. Deterministic and free
//! of audio, so an event log can be replayed to rebuild a session.

use chessvox_core::chess::{apply_command, computer_move, ApplyError, ApplyResult, Color, ComputerPolicy, GameState, GameStatus};
use chessvox_core::grammar::{ParseError, Slot};
use chessvox_core::vocabulary::Vocabulary;
use chessvox_core::{CommandEvent, FeatureKind, ParserState, TakeValidation, ValidationReason};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::profiles::ModelScope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GameMode {
    /// The speaker plays white; the computer answers every move.
    VsComputer,
    TwoPlayer,
}

/// Settings fixed when a session is created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub mode: GameMode,
    pub play_method: ModelScope,
    pub feature_kind: FeatureKind,
    pub k: usize,
    pub confirm_moves: bool,
    pub computer: ComputerPolicy,
}

/// A pipeline stage that failed. Reported inside outcomes and events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StageError {
    /// Undecodable WAV (`reason` absent) or a take that failed validation.
    BadAudio { reason: Option<ValidationReason>, detail: String },
    FeatureFailure { detail: String },
    /// A move is waiting for confirmation; audio is not processed.
    AwaitingConfirmation,
    ParseFailed { error: ParseError },
    ApplyFailed { command: CommandEvent, error: ApplyError },
    ComputerFailed { error: ApplyError },
}

impl StageError {
    pub fn rejected(validation: TakeValidation) -> Self {
        StageError::BadAudio {
            reason: Some(validation.reason),
            detail: format!("take rejected: {:?}", validation.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Created { settings: SessionSettings },
    /// Audio that never reached the parser. Changes nothing.
    AudioRejected { error: StageError },
    Recognized { word_id: String, confidence: f64 },
    ParseFailed { error: ParseError },
    CommandCompleted { command: CommandEvent },
    CommandPending { command: CommandEvent },
    Confirmed { accept: bool },
    CommandApplied { command: CommandEvent, result: ApplyResult },
    CommandFailed { command: CommandEvent, error: ApplyError },
    ComputerMoved { lan: String, result: ApplyResult },
    ComputerFailed { error: ApplyError },
    /// Terminal: by the close command or by deleting the session.
    Closed,
}

/// One log entry with the position after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub fen: String,
    pub status: GameStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParserSummary {
    pub idle: bool,
    pub expecting: Slot,
    pub pending_tokens: Vec<String>,
}

impl ParserSummary {
    pub fn of(parser: &ParserState) -> Self {
        Self {
            idle: parser.is_idle(),
            expecting: parser.expecting(),
            pending_tokens: parser.pending_tokens().to_vec(),
        }
    }
}

/// What one recognised word (or a confirmation) did.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Effects {
    pub commands: Vec<CommandEvent>,
    pub applied: Vec<ApplyResult>,
    pub pending: Option<CommandEvent>,
    pub computer_reply: Option<String>,
    pub errors: Vec<StageError>,
    pub closed: bool,
}

/// The mutable part of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionCore {
    settings: SessionSettings,
    game: GameState,
    parser: ParserState,
    pending: Option<CommandEvent>,
    closed: bool,
    log: Vec<SessionEvent>,
}

#[derive(Serialize)]
struct HashView<'a> {
    fen: String,
    history: Vec<String>,
    resigned: Option<Color>,
    parser: &'a ParserState,
    pending: &'a Option<CommandEvent>,
    closed: bool,
}

impl SessionCore {
    pub fn new(settings: SessionSettings) -> Self {
        let mut core = Self {
            settings: settings.clone(),
            game: GameState::initial(),
            parser: ParserState::new(),
            pending: None,
            closed: false,
            log: Vec::new(),
        };
        core.record(EventKind::Created { settings });
        core
    }

    pub fn settings(&self) -> &SessionSettings {
        &self.settings
    }

    pub fn game(&self) -> &GameState {
        &self.game
    }

    pub fn parser(&self) -> &ParserState {
        &self.parser
    }

    pub fn pending(&self) -> Option<&CommandEvent> {
        self.pending.as_ref()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.log
    }

    /// Digest of game, parser, pending command and closed flag. The event
    /// log is not part of it.
    pub fn state_hash(&self) -> String {
        let view = HashView {
            fen: self.game.to_fen(),
            history: self.game.history().iter().map(|r| r.mv.lan()).collect(),
            resigned: self.game.resigned(),
            parser: &self.parser,
            pending: &self.pending,
            closed: self.closed,
        };
        let json = serde_json::to_vec(&view).expect("state view serializes");
        hex::encode(Sha256::digest(json))
    }

    fn record(&mut self, kind: EventKind) {
        let event = SessionEvent {
            seq: self.log.len() as u64,
            kind,
            fen: self.game.to_fen(),
            status: self.game.status(),
        };
        self.log.push(event);
    }

    /// Logs a failed pre-parser stage. State is untouched.
    pub fn reject_audio(&mut self, error: StageError) {
        self.record(EventKind::AudioRejected { error });
    }

    /// Feeds one recognised word and applies whatever it completes.
    pub fn feed_word(&mut self, vocab: &Vocabulary, word_id: &str, confidence: f64) -> Effects {
        let mut fx = Effects::default();
        if self.pending.is_some() {
            fx.errors.push(StageError::AwaitingConfirmation);
            self.reject_audio(StageError::AwaitingConfirmation);
            return fx;
        }
        self.record(EventKind::Recognized { word_id: word_id.to_string(), confidence });
        let outcome = self.parser.feed(vocab, word_id);
        if let Some(error) = outcome.error {
            self.record(EventKind::ParseFailed { error: error.clone() });
            fx.errors.push(StageError::ParseFailed { error });
        }
        for command in outcome.commands {
            fx.commands.push(command.clone());
            self.record(EventKind::CommandCompleted { command: command.clone() });
            if self.pending.is_some() || self.closed {
                // a second command from the same word cannot overtake a held move
                fx.errors.push(StageError::AwaitingConfirmation);
                continue;
            }
            if self.settings.confirm_moves && matches!(command, CommandEvent::Move { .. } | CommandEvent::Castle { .. }) {
                let mut trial = self.game.clone();
                match apply_command(&mut trial, &command) {
                    Ok(_) => {
                        self.record(EventKind::CommandPending { command: command.clone() });
                        self.pending = Some(command);
                    }
                    Err(error) => self.fail(&mut fx, command, error),
                }
                continue;
            }
            self.execute(&mut fx, command);
        }
        fx.pending = self.pending.clone();
        fx.closed = self.closed;
        fx
    }

    /// Accepts or discards the held move.
    pub fn confirm(&mut self, accept: bool) -> Option<Effects> {
        let command = self.pending.take()?;
        self.record(EventKind::Confirmed { accept });
        let mut fx = Effects::default();
        if accept {
            self.execute(&mut fx, command);
        } else {
            self.parser.reset();
        }
        fx.closed = self.closed;
        Some(fx)
    }

    pub fn close(&mut self) {
        if !self.closed {
            self.closed = true;
            self.record(EventKind::Closed);
        }
    }

    fn fail(&mut self, fx: &mut Effects, command: CommandEvent, error: ApplyError) {
        self.record(EventKind::CommandFailed { command: command.clone(), error: error.clone() });
        fx.errors.push(StageError::ApplyFailed { command, error });
    }

    fn execute(&mut self, fx: &mut Effects, command: CommandEvent) {
        match apply_command(&mut self.game, &command) {
            Ok(result) => {
                self.record(EventKind::CommandApplied { command: command.clone(), result: result.clone() });
                let moved = matches!(result, ApplyResult::Moved { .. });
                let undone = matches!(result, ApplyResult::Undone { .. });
                fx.applied.push(result);
                if self.settings.mode == GameMode::VsComputer {
                    if moved {
                        self.computer_reply(fx);
                    } else if undone && self.game.side_to_move() == Color::Black && !self.game.history().is_empty() {
                        // take back the speaker's own move as well
                        if let Ok(result) = apply_command(&mut self.game, &CommandEvent::Undo) {
                            self.record(EventKind::CommandApplied { command: CommandEvent::Undo, result: result.clone() });
                            fx.applied.push(result);
                        }
                    }
                }
                if command == CommandEvent::Close {
                    self.close();
                }
            }
            Err(error) => self.fail(fx, command, error),
        }
    }

    fn computer_reply(&mut self, fx: &mut Effects) {
        if self.game.side_to_move() != Color::Black || self.game.status().is_over() {
            return;
        }
        let reply = computer_move(&self.game, self.settings.computer).and_then(|mv| {
            let cmd = CommandEvent::Move { piece: mv.piece, from: mv.from, to: mv.to, promotion: mv.promotion };
            apply_command(&mut self.game, &cmd).map(|result| (mv.lan(), result))
        });
        match reply {
            Ok((lan, result)) => {
                self.record(EventKind::ComputerMoved { lan: lan.clone(), result });
                fx.computer_reply = Some(lan);
            }
            Err(error) => {
                self.record(EventKind::ComputerFailed { error: error.clone() });
                fx.errors.push(StageError::ComputerFailed { error });
            }
        }
    }

    /// Rebuilds a session from its log by re-feeding the recorded inputs
    /// (recognised words, confirmations, closes).
    pub fn replay(vocab: &Vocabulary, events: &[SessionEvent]) -> Option<Self> {
        let EventKind::Created { settings } = &events.first()?.kind else {
            return None;
        };
        let mut core = Self::new(settings.clone());
        for event in &events[1..] {
            match &event.kind {
                EventKind::Recognized { word_id, confidence } => {
                    core.feed_word(vocab, word_id, *confidence);
                }
                EventKind::Confirmed { accept } => {
                    core.confirm(*accept);
                }
                EventKind::Closed => core.close(),
                EventKind::AudioRejected { error } => core.reject_audio(error.clone()),
                _ => {}
            }
        }
        Some(core)
    }
}
