use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::position::{GameState, GameStatus};
use super::types::{Color, Move, PieceKind, Square};
use crate::grammar::{CastleSide, CommandEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApplyError {
    #[error("no legal {piece:?} move from {from} to {to}")]
    IllegalMove { piece: PieceKind, from: Square, to: Square },
    #[error("castling is not legal here")]
    IllegalCastle,
    #[error("both castles are legal; say which side")]
    AmbiguousCastle,
    #[error("nothing to undo")]
    EmptyHistory,
    #[error("the game is over ({status:?})")]
    GameOver { status: GameStatus },
    #[error("no legal moves")]
    NoLegalMoves,
}

/// What a command did to the game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApplyResult {
    Moved { mv: Move, status: GameStatus },
    Undone { mv: Move },
    ResignationWithdrawn,
    NewGame,
    Resigned { side: Color },
    MateClaim { is_mate: bool },
    Start,
    Close,
}

/// Applies a parsed command. On error the state is left untouched.
pub fn apply_command(state: &mut GameState, cmd: &CommandEvent) -> Result<ApplyResult, ApplyError> {
    match *cmd {
        CommandEvent::Move { piece, from, to, promotion } => {
            ensure_playable(state)?;
            let mut matches = state
                .legal_moves()
                .into_iter()
                .filter(|m| m.piece == piece && m.from == from && m.to == to && m.promotion == promotion);
            match (matches.next(), matches.next()) {
                (Some(mv), None) => Ok(play(state, mv)),
                _ => Err(ApplyError::IllegalMove { piece, from, to }),
            }
        }
        CommandEvent::Castle { side } => {
            ensure_playable(state)?;
            let castles: Vec<Move> = state
                .legal_moves()
                .into_iter()
                .filter(|m| match side {
                    CastleSide::Kingside => m.flags.castle_kingside,
                    CastleSide::Queenside => m.flags.castle_queenside,
                    CastleSide::Auto => m.is_castle(),
                })
                .collect();
            match castles.as_slice() {
                [mv] => Ok(play(state, *mv)),
                [] => Err(ApplyError::IllegalCastle),
                _ => Err(ApplyError::AmbiguousCastle),
            }
        }
        CommandEvent::Undo => {
            if state.resigned.take().is_some() {
                return Ok(ApplyResult::ResignationWithdrawn);
            }
            state
                .unmake_move()
                .map(|mv| ApplyResult::Undone { mv })
                .ok_or(ApplyError::EmptyHistory)
        }
        CommandEvent::NewGame => {
            *state = GameState::initial();
            Ok(ApplyResult::NewGame)
        }
        CommandEvent::Resign => {
            ensure_playable(state)?;
            let side = state.side_to_move();
            state.set_resigned(side);
            Ok(ApplyResult::Resigned { side })
        }
        CommandEvent::ClaimMate => Ok(ApplyResult::MateClaim {
            is_mate: state.status() == GameStatus::Checkmate,
        }),
        CommandEvent::Start => Ok(ApplyResult::Start),
        CommandEvent::Close => Ok(ApplyResult::Close),
    }
}

fn ensure_playable(state: &GameState) -> Result<(), ApplyError> {
    match state.status() {
        status @ (GameStatus::Resigned(_) | GameStatus::Draw50Move) => Err(ApplyError::GameOver { status }),
        _ => Ok(()),
    }
}

fn play(state: &mut GameState, mv: Move) -> ApplyResult {
    state.make_move(mv);
    ApplyResult::Moved { mv, status: state.status() }
}

/// How the computer picks its reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComputerPolicy {
    /// Uniform over legal moves.
    Random { seed: u64 },
    /// Best immediate material gain (Q=9, R=5, B=N=3, P=1), ties at random.
    GreedyMaterial { seed: u64 },
}

impl Default for ComputerPolicy {
    fn default() -> Self {
        ComputerPolicy::GreedyMaterial { seed: 0 }
    }
}

fn material_gain(state: &GameState, mv: &Move) -> i32 {
    let captured = if mv.flags.en_passant {
        PieceKind::Pawn.value()
    } else {
        state.piece_at(mv.to).map_or(0, |p| p.kind.value())
    };
    let promotion = mv.promotion.map_or(0, |p| p.value() - PieceKind::Pawn.value());
    captured + promotion
}

/// Picks a move for the side to move. The choice depends only on the
/// position and the policy's seed.
pub fn computer_move(state: &GameState, policy: ComputerPolicy) -> Result<Move, ApplyError> {
    if let status @ (GameStatus::Resigned(_) | GameStatus::Draw50Move) = state.status() {
        return Err(ApplyError::GameOver { status });
    }
    let moves = state.legal_moves();
    if moves.is_empty() {
        return Err(ApplyError::NoLegalMoves);
    }
    let (candidates, seed) = match policy {
        ComputerPolicy::Random { seed } => (moves, seed),
        ComputerPolicy::GreedyMaterial { seed } => {
            let best = moves.iter().map(|m| material_gain(state, m)).max().expect("non-empty");
            let top = moves.into_iter().filter(|m| material_gain(state, m) == best).collect();
            (top, seed)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(state.fullmove_number()));
    Ok(candidates[rng.gen_range(0..candidates.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn sq(s: &str) -> Square {
        s.parse().unwrap()
    }

    fn mv(piece: PieceKind, from: &str, to: &str) -> CommandEvent {
        CommandEvent::Move { piece, from: sq(from), to: sq(to), promotion: None }
    }

    #[test]
    fn knight_development() {
        let mut s = GameState::initial();
        let r = apply_command(&mut s, &mv(PieceKind::Knight, "b1", "c3")).unwrap();
        assert!(matches!(r, ApplyResult::Moved { .. }));
        assert_eq!(s.piece_at(sq("c3")).unwrap().kind, PieceKind::Knight);
        assert_eq!(s.side_to_move(), Color::Black);
    }

    #[test]
    fn blocked_bishop_is_illegal() {
        let mut s = GameState::initial();
        let before = s.clone();
        assert!(matches!(
            apply_command(&mut s, &mv(PieceKind::Bishop, "c1", "h6")),
            Err(ApplyError::IllegalMove { .. })
        ));
        assert_eq!(s, before);
        // right squares, wrong piece name
        assert!(apply_command(&mut s, &mv(PieceKind::Bishop, "b1", "c3")).is_err());
    }

    #[test]
    fn undo_restores_and_empty_history() {
        let mut s = GameState::initial();
        assert_eq!(apply_command(&mut s, &CommandEvent::Undo), Err(ApplyError::EmptyHistory));
        let start = s.clone();
        apply_command(&mut s, &mv(PieceKind::Pawn, "e2", "e4")).unwrap();
        assert_eq!(s.en_passant(), Some(sq("e3")));
        apply_command(&mut s, &CommandEvent::Undo).unwrap();
        assert_eq!(s, start);
    }

    #[test]
    fn castle_auto_and_ambiguous() {
        let mut s = GameState::from_fen("r3k2r/8/8/8/8/8/8/R3K2R w KQkq - 0 1").unwrap();
        let before = s.clone();
        assert_eq!(
            apply_command(&mut s, &CommandEvent::Castle { side: CastleSide::Auto }),
            Err(ApplyError::AmbiguousCastle)
        );
        assert_eq!(s, before);
        apply_command(&mut s, &CommandEvent::Castle { side: CastleSide::Queenside }).unwrap();
        assert_eq!(s.piece_at(sq("c1")).unwrap().kind, PieceKind::King);
        assert_eq!(s.piece_at(sq("d1")).unwrap().kind, PieceKind::Rook);

        let mut k_only = GameState::from_fen("r3k2r/8/8/8/8/8/8/4K2R w Kkq - 0 1").unwrap();
        apply_command(&mut k_only, &CommandEvent::Castle { side: CastleSide::Auto }).unwrap();
        assert_eq!(k_only.piece_at(sq("g1")).unwrap().kind, PieceKind::King);
        assert_eq!(k_only.to_fen(), "r3k2r/8/8/8/8/8/8/5RK1 b kq - 1 1");
    }

    #[test]
    fn resign_claim_and_new_game() {
        let mut s = GameState::initial();
        assert_eq!(
            apply_command(&mut s, &CommandEvent::ClaimMate),
            Ok(ApplyResult::MateClaim { is_mate: false })
        );
        apply_command(&mut s, &CommandEvent::Resign).unwrap();
        assert_eq!(s.status(), GameStatus::Resigned(Color::White));
        assert!(matches!(
            apply_command(&mut s, &mv(PieceKind::Knight, "b1", "c3")),
            Err(ApplyError::GameOver { .. })
        ));
        assert_eq!(apply_command(&mut s, &CommandEvent::Undo), Ok(ApplyResult::ResignationWithdrawn));
        assert_eq!(s.status(), GameStatus::Ongoing);
        apply_command(&mut s, &mv(PieceKind::Knight, "b1", "c3")).unwrap();
        apply_command(&mut s, &CommandEvent::NewGame).unwrap();
        assert_eq!(s, GameState::initial());
        assert_eq!(apply_command(&mut s, &CommandEvent::Start), Ok(ApplyResult::Start));
        assert_eq!(s, GameState::initial());
    }

    #[test]
    fn mate_claim_after_fools_mate() {
        let mut s = GameState::initial();
        for (p, f, t) in [
            (PieceKind::Pawn, "f2", "f3"),
            (PieceKind::Pawn, "e7", "e5"),
            (PieceKind::Pawn, "g2", "g4"),
            (PieceKind::Queen, "d8", "h4"),
        ] {
            apply_command(&mut s, &mv(p, f, t)).unwrap();
        }
        let before = s.clone();
        assert_eq!(
            apply_command(&mut s, &CommandEvent::ClaimMate),
            Ok(ApplyResult::MateClaim { is_mate: true })
        );
        assert_eq!(s, before);
    }

    #[test]
    fn computer_policies() {
        // Kxg2 is the only legal move
        let s = GameState::from_fen("7k/8/8/8/8/8/6q1/7K w - - 0 1").unwrap();
        let only = s.legal_moves();
        assert_eq!(only.len(), 1);
        for policy in [ComputerPolicy::Random { seed: 3 }, ComputerPolicy::GreedyMaterial { seed: 3 }] {
            assert_eq!(computer_move(&s, policy).unwrap(), only[0]);
        }

        let free_queen = GameState::from_fen("4k3/8/8/3q4/8/8/8/3RK3 w - - 0 1").unwrap();
        let m = computer_move(&free_queen, ComputerPolicy::GreedyMaterial { seed: 9 }).unwrap();
        assert_eq!(m.lan(), String::from("d1d5"));

        let start = GameState::initial();
        let first = computer_move(&start, ComputerPolicy::Random { seed: 77 }).unwrap();
        for _ in 0..100 {
            assert_eq!(computer_move(&start, ComputerPolicy::Random { seed: 77 }).unwrap(), first);
        }

        let mated = GameState::from_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3").unwrap();
        assert_eq!(computer_move(&mated, ComputerPolicy::default()), Err(ApplyError::NoLegalMoves));
    }
}
