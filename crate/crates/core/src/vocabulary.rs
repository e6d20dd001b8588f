//! The 29-word command vocabulary.
//!
//! Word ids are ASCII keys (`sah`, `yeni_oyun`); display text carries the
//! Turkish spelling. The list ships as `data/vocabulary.tsv`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::PieceKind;

/// The vocabulary file bundled with the crate.
pub const STANDARD_VOCABULARY_TSV: &str = include_str!("../data/vocabulary.tsv");

pub const VOCABULARY_SIZE: usize = 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlWord {
    /// `mat`: claim checkmate.
    ClaimMate,
    /// `rok`: castling.
    Castle,
    Start,
    NewGame,
    Resign,
    Undo,
    Close,
}

impl ControlWord {
    const ALL: [ControlWord; 7] = [
        ControlWord::ClaimMate,
        ControlWord::Castle,
        ControlWord::Start,
        ControlWord::NewGame,
        ControlWord::Resign,
        ControlWord::Undo,
        ControlWord::Close,
    ];

    fn key(self) -> &'static str {
        match self {
            ControlWord::ClaimMate => "claim_mate",
            ControlWord::Castle => "castle",
            ControlWord::Start => "start",
            ControlWord::NewGame => "new_game",
            ControlWord::Resign => "resign",
            ControlWord::Undo => "undo",
            ControlWord::Close => "close",
        }
    }
}

/// Grammatical role of a word. Files and ranks are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "role", content = "value", rename_all = "snake_case")]
pub enum WordRole {
    File(u8),
    Rank(u8),
    Piece(PieceKind),
    Control(ControlWord),
}

impl WordRole {
    fn parse(s: &str) -> Option<Self> {
        let (kind, value) = s.split_once(':')?;
        let single = |v: &str| {
            let b = v.as_bytes();
            (b.len() == 1).then(|| b[0])
        };
        match kind {
            "file" => single(value).filter(|c| (b'a'..=b'h').contains(c)).map(|c| WordRole::File(c - b'a')),
            "rank" => single(value).filter(|c| (b'1'..=b'8').contains(c)).map(|c| WordRole::Rank(c - b'1')),
            "piece" => Some(WordRole::Piece(match value {
                "pawn" => PieceKind::Pawn,
                "knight" => PieceKind::Knight,
                "bishop" => PieceKind::Bishop,
                "rook" => PieceKind::Rook,
                "queen" => PieceKind::Queen,
                "king" => PieceKind::King,
                _ => return None,
            })),
            "control" => ControlWord::ALL.into_iter().find(|c| c.key() == value).map(WordRole::Control),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub word_id: String,
    pub display: String,
    pub role: WordRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabularyError {
    #[error("line {line}: expected `word_id<TAB>display<TAB>role`")]
    Syntax { line: usize },
    #[error("line {line}: unknown role {role:?}")]
    Role { line: usize, role: String },
    #[error("duplicate {0:?}")]
    Duplicate(String),
    #[error("word id {0:?} is not ASCII")]
    NonAsciiId(String),
    #[error("vocabulary must hold each file, rank, piece and control word exactly once")]
    Incomplete,
}

/// Ordered list of the command words with their roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
}

impl Vocabulary {
    /// The bundled vocabulary.
    pub fn standard() -> Self {
        Self::parse(STANDARD_VOCABULARY_TSV).expect("bundled vocabulary is valid")
    }

    /// Parses tab-separated `word_id display role` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, VocabularyError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(VocabularyError::Syntax { line: i + 1 });
            }
            let role = WordRole::parse(cols[2]).ok_or_else(|| VocabularyError::Role {
                line: i + 1,
                role: cols[2].to_string(),
            })?;
            entries.push(VocabEntry {
                word_id: cols[0].to_string(),
                display: cols[1].to_string(),
                role,
            });
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<VocabEntry>) -> Result<Self, VocabularyError> {
        let mut ids = BTreeSet::new();
        let mut displays = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for e in &entries {
            if !e.word_id.is_ascii() {
                return Err(VocabularyError::NonAsciiId(e.word_id.clone()));
            }
            if !ids.insert(e.word_id.as_str()) {
                return Err(VocabularyError::Duplicate(e.word_id.clone()));
            }
            if !displays.insert(e.display.as_str()) {
                return Err(VocabularyError::Duplicate(e.display.clone()));
            }
            if !roles.insert(e.role) {
                return Err(VocabularyError::Incomplete);
            }
        }
        if entries.len() != VOCABULARY_SIZE {
            return Err(VocabularyError::Incomplete);
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn word_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word_id.as_str())
    }

    pub fn get(&self, word_id: &str) -> Option<&VocabEntry> {
        self.entries.iter().find(|e| e.word_id == word_id)
    }

    pub fn role(&self, word_id: &str) -> Option<WordRole> {
        self.get(word_id).map(|e| e.role)
    }

    pub fn contains(&self, word_id: &str) -> bool {
        self.get(word_id).is_some()
    }

    pub fn display(&self, word_id: &str) -> Option<&str> {
        self.get(word_id).map(|e| e.display.as_str())
    }

    pub fn word_for_display(&self, display: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.display == display)
            .map(|e| e.word_id.as_str())
    }

    pub fn word_for_role(&self, role: WordRole) -> Option<&str> {
        self.entries.iter().find(|e| e.role == role).map(|e| e.word_id.as_str())
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::standard()
    }
}
