//! Forsyth-Edwards Notation import and export.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use super::position::GameState;
use super::types::{CastlingRights, Color, Piece, PieceKind, Square};

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FenError {
    #[error("FEN needs 6 space-separated fields")]
    FieldCount,
    #[error("bad piece placement field")]
    Placement,
    #[error("bad side-to-move field")]
    Side,
    #[error("bad castling field")]
    Castling,
    #[error("bad en passant field")]
    EnPassant,
    #[error("bad move counter")]
    Counter,
    #[error("position is not legal: {0}")]
    Illegal(&'static str),
}

impl GameState {
    /// Parses a FEN string; the resulting state has an empty history.
    pub fn from_fen(fen: &str) -> Result<Self, FenError> {
        let fields: Vec<&str> = fen.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(FenError::FieldCount);
        }
        let mut board = [None; 64];
        let ranks: Vec<&str> = fields[0].split('/').collect();
        if ranks.len() != 8 {
            return Err(FenError::Placement);
        }
        for (i, row) in ranks.iter().enumerate() {
            let rank = 7 - i as u8;
            let mut file = 0u8;
            for c in row.chars() {
                if let Some(skip) = c.to_digit(10) {
                    if !(1..=8).contains(&skip) {
                        return Err(FenError::Placement);
                    }
                    file += skip as u8;
                } else {
                    let piece = Piece::from_fen_char(c).ok_or(FenError::Placement)?;
                    let sq = Square::new(file, rank).ok_or(FenError::Placement)?;
                    board[sq.index()] = Some(piece);
                    file += 1;
                }
                if file > 8 {
                    return Err(FenError::Placement);
                }
            }
            if file != 8 {
                return Err(FenError::Placement);
            }
        }
        let side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            _ => return Err(FenError::Side),
        };
        let mut castling = CastlingRights::default();
        if fields[2] != "-" {
            for c in fields[2].chars() {
                match c {
                    'K' => castling.white_kingside = true,
                    'Q' => castling.white_queenside = true,
                    'k' => castling.black_kingside = true,
                    'q' => castling.black_queenside = true,
                    _ => return Err(FenError::Castling),
                }
            }
        }
        let en_passant = match fields[3] {
            "-" => None,
            s => {
                let sq: Square = s.parse().map_err(|_| FenError::EnPassant)?;
                if sq.rank() != 2 && sq.rank() != 5 {
                    return Err(FenError::EnPassant);
                }
                Some(sq)
            }
        };
        let halfmove_clock = fields[4].parse().map_err(|_| FenError::Counter)?;
        let fullmove_number: u32 = fields[5].parse().map_err(|_| FenError::Counter)?;
        if fullmove_number == 0 {
            return Err(FenError::Counter);
        }
        let state = Self {
            board,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
            history: Vec::new(),
            resigned: None,
        };
        state.check_legal()?;
        Ok(state)
    }

    fn check_legal(&self) -> Result<(), FenError> {
        for color in [Color::White, Color::Black] {
            let kings = self
                .board
                .iter()
                .filter(|p| **p == Some(Piece::new(color, PieceKind::King)))
                .count();
            if kings != 1 {
                return Err(FenError::Illegal("each side needs exactly one king"));
            }
        }
        if self.in_check(self.side_to_move.opponent()) {
            return Err(FenError::Illegal("side not to move is in check"));
        }
        let home = |idx: usize, kind: PieceKind, color: Color| self.board[idx] == Some(Piece::new(color, kind));
        let c = self.castling;
        let ok = (!c.white_kingside || (home(4, PieceKind::King, Color::White) && home(7, PieceKind::Rook, Color::White)))
            && (!c.white_queenside || (home(4, PieceKind::King, Color::White) && home(0, PieceKind::Rook, Color::White)))
            && (!c.black_kingside || (home(60, PieceKind::King, Color::Black) && home(63, PieceKind::Rook, Color::Black)))
            && (!c.black_queenside || (home(60, PieceKind::King, Color::Black) && home(56, PieceKind::Rook, Color::Black)));
        if !ok {
            return Err(FenError::Illegal("castling right without king and rook at home"));
        }
        Ok(())
    }

    pub fn to_fen(&self) -> String {
        let mut out = String::new();
        for rank in (0..8).rev() {
            let mut empty = 0;
            for file in 0..8 {
                match self.board[rank * 8 + file] {
                    Some(p) => {
                        if empty > 0 {
                            let _ = write!(out, "{empty}");
                            empty = 0;
                        }
                        out.push(p.fen_char());
                    }
                    None => empty += 1,
                }
            }
            if empty > 0 {
                let _ = write!(out, "{empty}");
            }
            if rank > 0 {
                out.push('/');
            }
        }
        out.push(' ');
        out.push(if self.side_to_move == Color::White { 'w' } else { 'b' });
        out.push(' ');
        let c = self.castling;
        let before = out.len();
        for (flag, ch) in [
            (c.white_kingside, 'K'),
            (c.white_queenside, 'Q'),
            (c.black_kingside, 'k'),
            (c.black_queenside, 'q'),
        ] {
            if flag {
                out.push(ch);
            }
        }
        if out.len() == before {
            out.push('-');
        }
        match self.en_passant {
            Some(sq) => {
                let _ = write!(out, " {sq}");
            }
            None => out.push_str(" -"),
        }
        let _ = write!(out, " {} {}", self.halfmove_clock, self.fullmove_number);
        out
    }
}
