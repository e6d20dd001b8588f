//! Incremental parser turning recognised words into chess commands.
//!
//! Grammar, one word per clip:
//!
//! * `PIECE FILE RANK FILE RANK` is a move. A pawn move ending on rank 1 or 8
//!   may be followed by `vezir|kale|fil|at` to pick the promotion piece;
//!   any other next word completes the move as a queen promotion and is then
//!   parsed on its own.
//! * `rok g` castles kingside, `rok c` queenside; `rok` followed by any other
//!   word completes as an automatic castle and that word is parsed on its own.
//! * `mat` claims checkmate; `başla`, `yeni oyun`, `çekil`, `geri al` and
//!   `kapat` complete immediately.
//!
//! A word in the wrong role is reported and the half-built command is
//! dropped.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::{PieceKind, Square};
use crate::vocabulary::{ControlWord, Vocabulary, WordRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CastleSide {
    Kingside,
    Queenside,
    /// Whichever castle is legal; ambiguous if both are.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommandEvent {
    Move {
        piece: PieceKind,
        from: Square,
        to: Square,
        promotion: Option<PieceKind>,
    },
    Castle {
        side: CastleSide,
    },
    NewGame,
    Start,
    Resign,
    Undo,
    Close,
    ClaimMate,
}

/// What the parser wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    /// A piece name or a control word.
    Command,
    File,
    Rank,
    /// `g` or `c` after `rok`; anything else castles automatically.
    CastleSide,
    /// Promotion piece; anything else promotes to a queen.
    Promotion,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseError {
    #[error("unexpected word {word_id:?}, expected {expected:?}")]
    UnexpectedToken { word_id: String, expected: Slot },
    #[error("word {word_id:?} is not in the vocabulary")]
    UnknownWord { word_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
enum Phase {
    #[default]
    Idle,
    Castle,
    Piece { piece: PieceKind },
    FromFile { piece: PieceKind, file: u8 },
    From { piece: PieceKind, from: Square },
    ToFile { piece: PieceKind, from: Square, file: u8 },
    Promotion { from: Square, to: Square },
}

/// Parser position plus the words consumed since the last completed command.
/// Replaying `pending_tokens` on a fresh parser reproduces the state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ParserState {
    phase: Phase,
    pending: Vec<String>,
}

/// Result of feeding one word. A word that completes a pending `rok` or
/// promotion and is then parsed on its own can yield two commands.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeedOutcome {
    pub commands: Vec<CommandEvent>,
    pub error: Option<ParseError>,
}

enum Step {
    Continue(Phase),
    Done(CommandEvent),
    /// Complete this command, then parse the same word from idle.
    DoneAndReplay(CommandEvent),
    Reject(Slot),
}

impl ParserState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_idle(&self) -> bool {
        self.phase == Phase::Idle
    }

    pub fn pending_tokens(&self) -> &[String] {
        &self.pending
    }

    pub fn expecting(&self) -> Slot {
        match self.phase {
            Phase::Idle => Slot::Command,
            Phase::Castle => Slot::CastleSide,
            Phase::Piece { .. } | Phase::From { .. } => Slot::File,
            Phase::FromFile { .. } | Phase::ToFile { .. } => Slot::Rank,
            Phase::Promotion { .. } => Slot::Promotion,
        }
    }

    /// Back to the initial state.
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Rebuilds a state by feeding `tokens` to a fresh parser.
    pub fn replay<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> (Self, Vec<FeedOutcome>) {
        let mut state = Self::new();
        let outcomes = tokens.iter().map(|t| state.feed(vocab, t.as_ref())).collect();
        (state, outcomes)
    }

    /// Completes a pending optional tail (`rok` or a promotion) with its
    /// default, as if a non-matching word had arrived.
    pub fn flush(&mut self) -> Option<CommandEvent> {
        let cmd = match self.phase {
            Phase::Castle => CommandEvent::Castle { side: CastleSide::Auto },
            Phase::Promotion { from, to } => CommandEvent::Move {
                piece: PieceKind::Pawn,
                from,
                to,
                promotion: Some(PieceKind::Queen),
            },
            _ => return None,
        };
        self.reset();
        Some(cmd)
    }

    /// Feeds one recognised word.
    pub fn feed(&mut self, vocab: &Vocabulary, word_id: &str) -> FeedOutcome {
        let Some(role) = vocab.role(word_id) else {
            return FeedOutcome {
                commands: Vec::new(),
                error: Some(ParseError::UnknownWord { word_id: word_id.into() }),
            };
        };
        let mut out = FeedOutcome::default();
        match step(self.phase, role) {
            Step::Continue(phase) => {
                self.phase = phase;
                self.pending.push(word_id.into());
            }
            Step::Done(cmd) => {
                self.reset();
                out.commands.push(cmd);
            }
            Step::DoneAndReplay(cmd) => {
                self.reset();
                out.commands.push(cmd);
                // from idle a single word never needs a second replay
                let again = self.feed(vocab, word_id);
                out.commands.extend(again.commands);
                out.error = again.error;
            }
            Step::Reject(expected) => {
                self.reset();
                out.error = Some(ParseError::UnexpectedToken { word_id: word_id.into(), expected });
            }
        }
        out
    }
}

fn step(phase: Phase, role: WordRole) -> Step {
    use WordRole::*;
    match (phase, role) {
        (Phase::Idle, Piece(piece)) => Step::Continue(Phase::Piece { piece }),
        (Phase::Idle, Control(c)) => match c {
            ControlWord::Castle => Step::Continue(Phase::Castle),
            ControlWord::ClaimMate => Step::Done(CommandEvent::ClaimMate),
            ControlWord::Start => Step::Done(CommandEvent::Start),
            ControlWord::NewGame => Step::Done(CommandEvent::NewGame),
            ControlWord::Resign => Step::Done(CommandEvent::Resign),
            ControlWord::Undo => Step::Done(CommandEvent::Undo),
            ControlWord::Close => Step::Done(CommandEvent::Close),
        },
        (Phase::Idle, _) => Step::Reject(Slot::Command),

        (Phase::Castle, File(6)) => Step::Done(CommandEvent::Castle { side: CastleSide::Kingside }),
        (Phase::Castle, File(2)) => Step::Done(CommandEvent::Castle { side: CastleSide::Queenside }),
        (Phase::Castle, _) => Step::DoneAndReplay(CommandEvent::Castle { side: CastleSide::Auto }),

        (Phase::Piece { piece }, File(file)) => Step::Continue(Phase::FromFile { piece, file }),
        (Phase::Piece { .. }, _) => Step::Reject(Slot::File),

        (Phase::FromFile { piece, file }, Rank(rank)) => Step::Continue(Phase::From {
            piece,
            from: Square::new(file, rank).expect("file and rank are 0..8"),
        }),
        (Phase::FromFile { .. }, _) => Step::Reject(Slot::Rank),

        (Phase::From { piece, from }, File(file)) => Step::Continue(Phase::ToFile { piece, from, file }),
        (Phase::From { .. }, _) => Step::Reject(Slot::File),

        (Phase::ToFile { piece, from, file }, Rank(rank)) => {
            let to = Square::new(file, rank).expect("file and rank are 0..8");
            if piece == PieceKind::Pawn && (rank == 0 || rank == 7) {
                Step::Continue(Phase::Promotion { from, to })
            } else {
                Step::Done(CommandEvent::Move { piece, from, to, promotion: None })
            }
        }
        (Phase::ToFile { .. }, _) => Step::Reject(Slot::Rank),

        (Phase::Promotion { from, to }, Piece(p)) if PieceKind::PROMOTIONS.contains(&p) => {
            Step::Done(CommandEvent::Move { piece: PieceKind::Pawn, from, to, promotion: Some(p) })
        }
        (Phase::Promotion { from, to }, _) => Step::DoneAndReplay(CommandEvent::Move {
            piece: PieceKind::Pawn,
            from,
            to,
            promotion: Some(PieceKind::Queen),
        }),
    }
}

/// Functional form of [`ParserState::feed`].
pub fn feed_token(state: &ParserState, vocab: &Vocabulary, word_id: &str) -> (ParserState, FeedOutcome) {
    let mut next = state.clone();
    let outcome = next.feed(vocab, word_id);
    (next, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sq(s: &str) -> Square {
        s.parse().unwrap()
    }

    fn run(tokens: &[&str]) -> (ParserState, Vec<CommandEvent>, Vec<ParseError>) {
        let vocab = Vocabulary::standard();
        let (state, outcomes) = ParserState::replay(&vocab, tokens);
        let commands = outcomes.iter().flat_map(|o| o.commands.clone()).collect();
        let errors = outcomes.into_iter().filter_map(|o| o.error).collect();
        (state, commands, errors)
    }

    #[test]
    fn five_token_move() {
        let (state, cmds, errs) = run(&["at", "b", "1", "c", "3"]);
        assert!(state.is_idle() && errs.is_empty());
        assert_eq!(
            cmds,
            vec![CommandEvent::Move { piece: PieceKind::Knight, from: sq("b1"), to: sq("c3"), promotion: None }]
        );
    }

    #[test]
    fn control_words() {
        assert_eq!(run(&["yeni_oyun"]).1, vec![CommandEvent::NewGame]);
        assert_eq!(
            run(&["basla", "cekil", "geri_al", "kapat", "mat"]).1,
            vec![
                CommandEvent::Start,
                CommandEvent::Resign,
                CommandEvent::Undo,
                CommandEvent::Close,
                CommandEvent::ClaimMate
            ]
        );
    }

    #[test]
    fn promotion() {
        let explicit = run(&["piyon", "e", "7", "e", "8", "vezir"]).1;
        assert_eq!(
            explicit,
            vec![CommandEvent::Move {
                piece: PieceKind::Pawn,
                from: sq("e7"),
                to: sq("e8"),
                promotion: Some(PieceKind::Queen)
            }]
        );
        let knight = run(&["piyon", "b", "2", "a", "1", "at"]).1;
        assert!(matches!(knight[0], CommandEvent::Move { promotion: Some(PieceKind::Knight), .. }));

        // a non-promotion word completes with a queen and is parsed again
        let (state, cmds, errs) = run(&["piyon", "e", "7", "e", "8", "sah"]);
        assert!(matches!(cmds[0], CommandEvent::Move { promotion: Some(PieceKind::Queen), .. }));
        assert!(errs.is_empty());
        assert_eq!(state.expecting(), Slot::File);
        assert_eq!(state.pending_tokens(), &["sah"]);

        // ordinary pawn moves never wait
        let (state, cmds, _) = run(&["piyon", "e", "2", "e", "4"]);
        assert!(state.is_idle());
        assert!(matches!(cmds[0], CommandEvent::Move { promotion: None, .. }));
    }

    #[test]
    fn castling() {
        assert_eq!(run(&["rok", "g"]).1, vec![CommandEvent::Castle { side: CastleSide::Kingside }]);
        assert_eq!(run(&["rok", "c"]).1, vec![CommandEvent::Castle { side: CastleSide::Queenside }]);
        let (_, cmds, errs) = run(&["rok", "yeni_oyun"]);
        assert_eq!(cmds, vec![CommandEvent::Castle { side: CastleSide::Auto }, CommandEvent::NewGame]);
        assert!(errs.is_empty());
        // a file other than g/c: castle completes, the file is then unexpected
        let (state, cmds, errs) = run(&["rok", "e"]);
        assert_eq!(cmds, vec![CommandEvent::Castle { side: CastleSide::Auto }]);
        assert!(matches!(errs[0], ParseError::UnexpectedToken { expected: Slot::Command, .. }));
        assert!(state.is_idle());
        let (state, _, _) = run(&["rok", "rok"]);
        assert_eq!(state.expecting(), Slot::CastleSide);
    }

    #[test]
    fn role_violation_resets() {
        let (state, cmds, errs) = run(&["at", "at"]);
        assert!(cmds.is_empty() && state.is_idle());
        assert_eq!(
            errs,
            vec![ParseError::UnexpectedToken { word_id: "at".into(), expected: Slot::File }]
        );
        let (_, _, errs) = run(&["at", "b", "yeni_oyun"]);
        assert!(matches!(errs[0], ParseError::UnexpectedToken { expected: Slot::Rank, .. }));
    }

    #[test]
    fn unknown_word_leaves_state() {
        let vocab = Vocabulary::standard();
        let (mut state, _) = ParserState::replay(&vocab, &["at", "b"]);
        let before = state.clone();
        let out = state.feed(&vocab, "rook");
        assert!(matches!(out.error, Some(ParseError::UnknownWord { .. })));
        assert_eq!(state, before);
    }

    #[test]
    fn reset_and_flush() {
        let vocab = Vocabulary::standard();
        let mut s = ParserState::new();
        s.reset();
        assert_eq!(s, ParserState::new());
        s.feed(&vocab, "at");
        s.feed(&vocab, "b");
        s.reset();
        assert_eq!(s, ParserState::new());

        s.feed(&vocab, "rok");
        assert_eq!(s.flush(), Some(CommandEvent::Castle { side: CastleSide::Auto }));
        assert!(s.is_idle());
        assert_eq!(s.flush(), None);
    }
}
