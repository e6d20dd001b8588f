use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::types::{CastlingRights, Color, Move, MoveFlags, Piece, PieceKind, Square};

const KNIGHT_STEPS: [(i8, i8); 8] = [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)];
const KING_STEPS: [(i8, i8); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const ROOK_DIRS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Everything needed to take a move back.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveRecord {
    pub mv: Move,
    pub captured: Option<Piece>,
    pub castling: CastlingRights,
    pub en_passant: Option<Square>,
    pub halfmove_clock: u32,
    pub fullmove_number: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "side", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GameStatus {
    Ongoing,
    Check,
    Checkmate,
    Stalemate,
    #[serde(rename = "DRAW_50_MOVE")]
    Draw50Move,
    /// The given side resigned.
    Resigned(Color),
}

impl GameStatus {
    pub fn is_over(self) -> bool {
        !matches!(self, GameStatus::Ongoing | GameStatus::Check)
    }
}

/// Authoritative game position plus the undo stack. FEN is its wire form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    pub(crate) board: [Option<Piece>; 64],
    pub(crate) side_to_move: Color,
    pub(crate) castling: CastlingRights,
    pub(crate) en_passant: Option<Square>,
    pub(crate) halfmove_clock: u32,
    pub(crate) fullmove_number: u32,
    pub(crate) history: Vec<MoveRecord>,
    pub(crate) resigned: Option<Color>,
}

impl Default for GameState {
    fn default() -> Self {
        Self::initial()
    }
}

impl GameState {
    /// Standard starting position.
    pub fn initial() -> Self {
        let mut board = [None; 64];
        let back = [
            PieceKind::Rook,
            PieceKind::Knight,
            PieceKind::Bishop,
            PieceKind::Queen,
            PieceKind::King,
            PieceKind::Bishop,
            PieceKind::Knight,
            PieceKind::Rook,
        ];
        for (file, kind) in back.into_iter().enumerate() {
            board[file] = Some(Piece::new(Color::White, kind));
            board[8 + file] = Some(Piece::new(Color::White, PieceKind::Pawn));
            board[48 + file] = Some(Piece::new(Color::Black, PieceKind::Pawn));
            board[56 + file] = Some(Piece::new(Color::Black, kind));
        }
        Self {
            board,
            side_to_move: Color::White,
            castling: CastlingRights::ALL,
            en_passant: None,
            halfmove_clock: 0,
            fullmove_number: 1,
            history: Vec::new(),
            resigned: None,
        }
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.board[sq.index()]
    }

    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    pub fn history(&self) -> &[MoveRecord] {
        &self.history
    }

    pub fn resigned(&self) -> Option<Color> {
        self.resigned
    }

    pub(crate) fn set_resigned(&mut self, color: Color) {
        self.resigned = Some(color);
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        Square::all().find(|&s| self.board[s.index()] == Some(Piece::new(color, PieceKind::King)))
    }

    /// Whether any piece of `by` attacks `target`.
    pub fn is_attacked(&self, target: Square, by: Color) -> bool {
        let holds = |sq: Option<Square>, kinds: &[PieceKind]| {
            sq.and_then(|s| self.board[s.index()])
                .is_some_and(|p| p.color == by && kinds.contains(&p.kind))
        };
        // a pawn of `by` attacks diagonally forward, so look one rank back
        let back = if by == Color::White { -1 } else { 1 };
        if holds(target.offset(-1, back), &[PieceKind::Pawn]) || holds(target.offset(1, back), &[PieceKind::Pawn]) {
            return true;
        }
        if KNIGHT_STEPS.iter().any(|&(f, r)| holds(target.offset(f, r), &[PieceKind::Knight])) {
            return true;
        }
        if KING_STEPS.iter().any(|&(f, r)| holds(target.offset(f, r), &[PieceKind::King])) {
            return true;
        }
        let slides = |dirs: &[(i8, i8)], kinds: &[PieceKind]| {
            dirs.iter().any(|&(df, dr)| {
                let mut cur = target.offset(df, dr);
                while let Some(s) = cur {
                    if let Some(p) = self.board[s.index()] {
                        return p.color == by && kinds.contains(&p.kind);
                    }
                    cur = s.offset(df, dr);
                }
                false
            })
        };
        slides(&ROOK_DIRS, &[PieceKind::Rook, PieceKind::Queen])
            || slides(&BISHOP_DIRS, &[PieceKind::Bishop, PieceKind::Queen])
    }

    pub fn in_check(&self, color: Color) -> bool {
        self.king_square(color)
            .is_some_and(|k| self.is_attacked(k, color.opponent()))
    }

    fn push_pawn_moves(&self, from: Square, to: Square, flags: MoveFlags, out: &mut Vec<Move>) {
        let last_rank = if self.side_to_move == Color::White { 7 } else { 0 };
        if to.rank() == last_rank {
            for promo in PieceKind::PROMOTIONS {
                out.push(Move { from, to, piece: PieceKind::Pawn, promotion: Some(promo), flags });
            }
        } else {
            out.push(Move { from, to, piece: PieceKind::Pawn, promotion: None, flags });
        }
    }

    fn pseudo_legal_moves(&self) -> Vec<Move> {
        let us = self.side_to_move;
        let mut out = Vec::with_capacity(48);
        for from in Square::all() {
            let Some(piece) = self.board[from.index()] else { continue };
            if piece.color != us {
                continue;
            }
            let plain = |to: Square, capture: bool| Move {
                from,
                to,
                piece: piece.kind,
                promotion: None,
                flags: MoveFlags { capture, ..MoveFlags::default() },
            };
            match piece.kind {
                PieceKind::Pawn => {
                    let (dir, start_rank) = if us == Color::White { (1, 1) } else { (-1, 6) };
                    if let Some(one) = from.offset(0, dir) {
                        if self.board[one.index()].is_none() {
                            self.push_pawn_moves(from, one, MoveFlags::default(), &mut out);
                            if from.rank() == start_rank {
                                let two = one.offset(0, dir).expect("double push stays on board");
                                if self.board[two.index()].is_none() {
                                    out.push(Move {
                                        from,
                                        to: two,
                                        piece: PieceKind::Pawn,
                                        promotion: None,
                                        flags: MoveFlags { double_push: true, ..MoveFlags::default() },
                                    });
                                }
                            }
                        }
                    }
                    for df in [-1, 1] {
                        let Some(to) = from.offset(df, dir) else { continue };
                        match self.board[to.index()] {
                            Some(p) if p.color != us => self.push_pawn_moves(
                                from,
                                to,
                                MoveFlags { capture: true, ..MoveFlags::default() },
                                &mut out,
                            ),
                            None if self.en_passant == Some(to) => out.push(Move {
                                from,
                                to,
                                piece: PieceKind::Pawn,
                                promotion: None,
                                flags: MoveFlags { capture: true, en_passant: true, ..MoveFlags::default() },
                            }),
                            _ => {}
                        }
                    }
                }
                PieceKind::Knight | PieceKind::King => {
                    let steps = if piece.kind == PieceKind::Knight { &KNIGHT_STEPS } else { &KING_STEPS };
                    for &(df, dr) in steps {
                        let Some(to) = from.offset(df, dr) else { continue };
                        match self.board[to.index()] {
                            None => out.push(plain(to, false)),
                            Some(p) if p.color != us => out.push(plain(to, true)),
                            _ => {}
                        }
                    }
                    if piece.kind == PieceKind::King {
                        self.push_castles(from, &mut out);
                    }
                }
                PieceKind::Bishop | PieceKind::Rook | PieceKind::Queen => {
                    let dirs: &[(i8, i8)] = match piece.kind {
                        PieceKind::Bishop => &BISHOP_DIRS,
                        PieceKind::Rook => &ROOK_DIRS,
                        _ => &KING_STEPS,
                    };
                    for &(df, dr) in dirs {
                        let mut cur = from.offset(df, dr);
                        while let Some(to) = cur {
                            match self.board[to.index()] {
                                None => out.push(plain(to, false)),
                                Some(p) => {
                                    if p.color != us {
                                        out.push(plain(to, true));
                                    }
                                    break;
                                }
                            }
                            cur = to.offset(df, dr);
                        }
                    }
                }
            }
        }
        out
    }

    fn push_castles(&self, from: Square, out: &mut Vec<Move>) {
        let us = self.side_to_move;
        let home = if us == Color::White { 0 } else { 56 };
        if from.index() != home + 4 {
            return;
        }
        let them = us.opponent();
        let sq = |i: usize| Square::from_index(home + i).expect("home rank square");
        let empty = |i: usize| self.board[home + i].is_none();
        let rook_on = |i: usize| self.board[home + i] == Some(Piece::new(us, PieceKind::Rook));
        let safe = |i: usize| !self.is_attacked(sq(i), them);
        if self.castling.kingside(us) && rook_on(7) && empty(5) && empty(6) && safe(4) && safe(5) && safe(6) {
            out.push(Move {
                from,
                to: sq(6),
                piece: PieceKind::King,
                promotion: None,
                flags: MoveFlags { castle_kingside: true, ..MoveFlags::default() },
            });
        }
        if self.castling.queenside(us)
            && rook_on(0)
            && empty(1)
            && empty(2)
            && empty(3)
            && safe(4)
            && safe(3)
            && safe(2)
        {
            out.push(Move {
                from,
                to: sq(2),
                piece: PieceKind::King,
                promotion: None,
                flags: MoveFlags { castle_queenside: true, ..MoveFlags::default() },
            });
        }
    }

    /// All legal moves for the side to move (empty once someone resigned).
    pub fn legal_moves(&self) -> Vec<Move> {
        if self.resigned.is_some() {
            return Vec::new();
        }
        let us = self.side_to_move;
        let mut scratch = self.clone();
        self.pseudo_legal_moves()
            .into_iter()
            .filter(|&mv| {
                scratch.make_move(mv);
                let ok = !scratch.in_check(us);
                scratch.unmake_move();
                ok
            })
            .collect()
    }

    /// Plays a move without legality checks and pushes its undo record.
    pub(crate) fn make_move(&mut self, mv: Move) {
        let us = self.side_to_move;
        let captured_sq = if mv.flags.en_passant {
            Square::new(mv.to.file(), mv.from.rank()).expect("en passant victim square")
        } else {
            mv.to
        };
        let captured = self.board[captured_sq.index()].take();
        self.history.push(MoveRecord {
            mv,
            captured,
            castling: self.castling,
            en_passant: self.en_passant,
            halfmove_clock: self.halfmove_clock,
            fullmove_number: self.fullmove_number,
        });

        let moving = self.board[mv.from.index()].take().expect("piece on from-square");
        let placed = match mv.promotion {
            Some(kind) => Piece::new(us, kind),
            None => moving,
        };
        self.board[mv.to.index()] = Some(placed);

        if mv.is_castle() {
            let home = mv.from.index() - 4;
            let (rook_from, rook_to) = if mv.flags.castle_kingside { (home + 7, home + 5) } else { (home, home + 3) };
            self.board[rook_to] = self.board[rook_from].take();
        }

        if moving.kind == PieceKind::King {
            self.castling.clear(us);
        }
        self.castling.clear_rook_square(mv.from);
        self.castling.clear_rook_square(mv.to);

        self.en_passant = if mv.flags.double_push {
            Square::new(mv.from.file(), (mv.from.rank() + mv.to.rank()) / 2)
        } else {
            None
        };
        if moving.kind == PieceKind::Pawn || captured.is_some() {
            self.halfmove_clock = 0;
        } else {
            self.halfmove_clock += 1;
        }
        if us == Color::Black {
            self.fullmove_number += 1;
        }
        self.side_to_move = us.opponent();
    }

    /// Reverts the last move. Returns it, or `None` at the start of history.
    pub(crate) fn unmake_move(&mut self) -> Option<Move> {
        let record = self.history.pop()?;
        let mv = record.mv;
        let us = self.side_to_move.opponent();
        self.board[mv.to.index()] = None;
        self.board[mv.from.index()] = Some(Piece::new(us, mv.piece));
        if let Some(captured) = record.captured {
            let sq = if mv.flags.en_passant {
                Square::new(mv.to.file(), mv.from.rank()).expect("en passant victim square")
            } else {
                mv.to
            };
            self.board[sq.index()] = Some(captured);
        }
        if mv.is_castle() {
            let home = mv.from.index() - 4;
            let (rook_from, rook_to) = if mv.flags.castle_kingside { (home + 7, home + 5) } else { (home, home + 3) };
            self.board[rook_from] = self.board[rook_to].take();
        }
        self.side_to_move = us;
        self.castling = record.castling;
        self.en_passant = record.en_passant;
        self.halfmove_clock = record.halfmove_clock;
        self.fullmove_number = record.fullmove_number;
        Some(mv)
    }

    pub fn status(&self) -> GameStatus {
        if let Some(side) = self.resigned {
            return GameStatus::Resigned(side);
        }
        let check = self.in_check(self.side_to_move);
        if self.legal_moves().is_empty() {
            return if check { GameStatus::Checkmate } else { GameStatus::Stalemate };
        }
        if self.halfmove_clock >= 100 {
            return GameStatus::Draw50Move;
        }
        if check {
            GameStatus::Check
        } else {
            GameStatus::Ongoing
        }
    }

    /// Leaf count of the legal move tree to `depth` plies.
    pub fn perft(&self, depth: u32) -> u64 {
        let mut scratch = self.clone();
        scratch.history.clear();
        perft_inner(&mut scratch, depth)
    }

    /// Finds the legal move written in long algebraic notation.
    pub fn find_lan(&self, lan: &str) -> Option<Move> {
        self.legal_moves().into_iter().find(|m| m.lan() == lan)
    }

    /// Material sum (white minus black) with the greedy opponent's values.
    pub fn material_balance(&self) -> i32 {
        self.board
            .iter()
            .flatten()
            .map(|p| match p.color {
                Color::White => p.kind.value(),
                Color::Black => -p.kind.value(),
            })
            .sum()
    }

    /// ASCII diagram, rank 8 first.
    pub fn diagram(&self) -> String {
        let mut s = String::new();
        for rank in (0..8).rev() {
            for file in 0..8 {
                let sq = Square::new(file, rank).expect("on board");
                s.push(self.piece_at(sq).map_or('.', Piece::fen_char));
            }
            s.push('\n');
        }
        s
    }
}

fn perft_inner(state: &mut GameState, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = state.legal_moves();
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .into_iter()
        .map(|mv| {
            state.make_move(mv);
            let n = perft_inner(state, depth - 1);
            state.unmake_move();
            n
        })
        .sum()
}
