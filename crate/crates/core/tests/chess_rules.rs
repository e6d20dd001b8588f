use chessvox_core::chess::{apply_command, ApplyResult, Color, GameState, GameStatus, PieceKind, Square, START_FEN};
use chessvox_core::grammar::CommandEvent;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Reference leaf counts from the standard perft test positions.
const PERFT_SUITE: &[(&str, &[u64])] = &[
    (START_FEN, &[20, 400, 8902]),
    ("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1", &[48, 2039, 97862]),
    ("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1", &[14, 191, 2812, 43238]),
    ("r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1", &[6, 264, 9467]),
    ("rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8", &[44, 1486, 62379]),
];

#[test]
fn perft_reference_positions() {
    for (fen, counts) in PERFT_SUITE {
        let state = GameState::from_fen(fen).unwrap();
        for (depth, &expected) in counts.iter().enumerate() {
            assert_eq!(state.perft(depth as u32 + 1), expected, "{fen} depth {}", depth + 1);
        }
    }
}

#[test]
fn initial_position_basics() {
    let s = GameState::initial();
    assert_eq!(s.to_fen(), START_FEN);
    assert_eq!(s.legal_moves().len(), 20);
    assert_eq!(s.status(), GameStatus::Ongoing);
    assert_eq!(GameState::from_fen(START_FEN).unwrap(), s);
}

#[test]
fn lone_king_moves() {
    let s = GameState::from_fen("k7/8/8/8/4K3/8/8/8 w - - 0 1").unwrap();
    assert_eq!(s.legal_moves().len(), 8);
    // enemy king two files away takes away the shared squares
    let close = GameState::from_fen("8/8/8/8/2k1K3/8/8/8 w - - 0 1").unwrap();
    assert_eq!(close.legal_moves().len(), 5);
}

#[test]
fn fools_mate_is_checkmate() {
    let mut s = GameState::initial();
    for lan in ["f2f3", "e7e5", "g2g4", "d8h4"] {
        let mv = s.find_lan(lan).unwrap();
        let cmd = CommandEvent::Move { piece: mv.piece, from: mv.from, to: mv.to, promotion: mv.promotion };
        apply_command(&mut s, &cmd).unwrap();
    }
    assert!(s.legal_moves().is_empty());
    assert_eq!(s.status(), GameStatus::Checkmate);
    assert!(s.in_check(Color::White));
}

#[test]
fn stalemate_and_fifty_moves() {
    let stale = GameState::from_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1").unwrap();
    assert_eq!(stale.status(), GameStatus::Stalemate);
    let fifty = GameState::from_fen("7k/8/8/8/8/8/8/R6K w - - 100 80").unwrap();
    assert_eq!(fifty.status(), GameStatus::Draw50Move);
}

#[test]
fn en_passant_and_promotion_flags() {
    let mut s = GameState::from_fen("4k3/8/8/3pP3/8/8/8/4K3 w - d6 0 1").unwrap();
    let ep = s.find_lan("e5d6").unwrap();
    assert!(ep.flags.en_passant);
    let cmd = CommandEvent::Move { piece: PieceKind::Pawn, from: ep.from, to: ep.to, promotion: None };
    apply_command(&mut s, &cmd).unwrap();
    assert!(s.piece_at("d5".parse().unwrap()).is_none());
    assert_eq!(s.to_fen(), "4k3/8/3P4/8/8/8/8/4K3 b - - 0 1");

    let promo = GameState::from_fen("8/4P3/8/8/8/8/8/k3K3 w - - 0 1").unwrap();
    let promos: Vec<String> = promo.legal_moves().iter().filter(|m| m.piece == PieceKind::Pawn).map(|m| m.lan()).collect();
    assert_eq!(promos.len(), 4);
    assert!(promos.contains(&"e7e8q".to_string()) && promos.contains(&"e7e8n".to_string()));
}

#[test]
fn fen_errors() {
    assert!(GameState::from_fen("8/8/8/8/8/8/8/8 w - - 0 1").is_err());
    assert!(GameState::from_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR x KQkq - 0 1").is_err());
    assert!(GameState::from_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP w KQkq - 0 1").is_err());
    // castling right without the rook at home
    assert!(GameState::from_fen("4k3/8/8/8/8/8/8/4K3 w K - 0 1").is_err());
    // side not to move in check
    assert!(GameState::from_fen("4k3/8/8/8/8/8/8/4K2r b - - 0 1").is_err());
}

fn command_for(mv: &chessvox_core::chess::Move) -> CommandEvent {
    CommandEvent::Move { piece: mv.piece, from: mv.from, to: mv.to, promotion: mv.promotion }
}

#[test]
fn apply_then_undo_is_identity_along_playouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut steps = 0;
    while steps < 1000 {
        let mut s = GameState::initial();
        for _ in 0..120 {
            let moves = s.legal_moves();
            if moves.is_empty() || s.status().is_over() {
                break;
            }
            let mv = moves[rng.gen_range(0..moves.len())];
            let before = s.clone();
            let applied = apply_command(&mut s, &command_for(&mv));
            assert!(matches!(applied, Ok(ApplyResult::Moved { .. })), "{mv} in {}", before.to_fen());
            assert!(!s.in_check(before.side_to_move()), "mover left in check");
            let mut undone = s.clone();
            apply_command(&mut undone, &CommandEvent::Undo).unwrap();
            assert_eq!(undone, before);
            assert_eq!(undone.to_fen(), before.to_fen());
            steps += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fen_round_trips_along_random_games(seed in any::<u64>(), plies in 0usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = GameState::initial();
        for _ in 0..plies {
            let moves = s.legal_moves();
            if moves.is_empty() { break; }
            let mv = moves[rng.gen_range(0..moves.len())];
            apply_command(&mut s, &command_for(&mv)).unwrap();
        }
        let parsed = GameState::from_fen(&s.to_fen()).unwrap();
        prop_assert_eq!(parsed.to_fen(), s.to_fen());
        prop_assert_eq!(parsed.legal_moves().len(), s.legal_moves().len());
        prop_assert_eq!(parsed.status(), s.status());
    }

    #[test]
    fn every_square_parses(file in 0u8..8, rank in 0u8..8) {
        let sq = Square::new(file, rank).unwrap();
        prop_assert_eq!(sq.to_string().parse::<Square>().unwrap(), sq);
    }
}
