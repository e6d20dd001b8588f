//! Chess rules: legal move generation, make/unmake, game status, FEN and a
//! simple computer opponent.

mod fen;
mod game;
mod position;
mod types;

pub use fen::{FenError, START_FEN};
pub use game::{apply_command, computer_move, ApplyError, ApplyResult, ComputerPolicy};
pub use position::{GameState, GameStatus, MoveRecord};
pub use types::{CastlingRights, Color, Move, MoveFlags, Piece, PieceKind, Square, SquareParseError};
