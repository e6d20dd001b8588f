//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach stdout; exits non-zero on any FAIL.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chessvox::config::ServiceConfig;
use chessvox::eval::{render_text, run_eval, EvalConfig, EvalScope};
use chessvox::fixture::{generate_corpus, FixtureConfig};
use chessvox::profiles::ModelScope;
use chessvox::service::{CreateSession, Service, ServiceError};
use chessvox::session::{GameMode, SessionCore, StageError};
use chessvox_core::audio::encode_wav;
use chessvox_core::chess::{apply_command, ApplyResult, GameState, Move};
use chessvox_core::classifier::{metrics, ConfusionMatrix, KnnModel, LabeledDataset, Point};
use chessvox_core::features::{dct_ii, erb, frame_signal, gammatone_bandwidth, gammatone_response, idct_ii, power_spectrum, FeatureExtractor, LOG_FLOOR};
use chessvox_core::grammar::{FeedOutcome, Slot};
use chessvox_core::{AudioClip, ClipEmbedding, CommandEvent, FeatureKind, ParserState, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type CheckFn<'a> = dyn FnOnce() -> Check + 'a;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// metric fidelity

fn independent_counts(counts: &[Vec<u64>], c: usize) -> (u64, u64, u64, u64) {
    let (mut tp, mut fneg, mut fpos, mut tn) = (0, 0, 0, 0);
    for (t, row) in counts.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            match (t == c, p == c) {
                (true, true) => tp += v,
                (true, false) => fneg += v,
                (false, true) => fpos += v,
                (false, false) => tn += v,
            }
        }
    }
    (tp, fneg, fpos, tn)
}

fn metric_fidelity() -> Check {
    let cm = ConfusionMatrix::from_counts(vec!["A".into(), "B".into()], vec![vec![3, 1], vec![2, 4]]).unwrap();
    let r = metrics(&cm).unwrap();
    let a = r.per_class["A"];
    ensure(a.sen == Some(75.0) && a.sel == Some(60.0) && r.overall == 70.0, || {
        format!("[[3,1],[2,4]] gave SEN_A={:?} SEL_A={:?} overall={}", a.sen, a.sel, r.overall)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(2..=8);
        let labels: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
        let counts: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..6)).collect()).collect();
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            continue;
        }
        let r = metrics(&ConfusionMatrix::from_counts(labels.clone(), counts.clone()).unwrap()).unwrap();
        let pct = |a: u64, b: u64| (b > 0).then(|| 100.0 * a as f64 / b as f64);
        for (c, l) in labels.iter().enumerate() {
            let (tp, fneg, fpos, tn) = independent_counts(&counts, c);
            let m = r.per_class[l];
            ensure(
                (m.tp, m.fn_, m.fp, m.tn) == (tp, fneg, fpos, tn)
                    && m.sen == pct(tp, tp + fneg)
                    && m.sel == pct(tp, tp + fpos)
                    && m.spe == pct(tn, tn + fpos),
                || format!("matrix {checked} class {l}: {m:?}"),
            )?;
        }
        let trace: u64 = (0..n).map(|i| counts[i][i]).sum();
        ensure(r.overall == 100.0 * trace as f64 / total as f64, || format!("matrix {checked}: overall {}", r.overall))?;
        checked += 1;
    }
    Ok("SEN_A=75.0 SEL_A=60.0 overall=70.0; 50 random matrices exact".into())
}

// k-NN oracle

/// Full sort by (distance, index), plurality, then smaller mean distance,
/// then smaller label.
fn brute_force(train: &[(Vec<f64>, String)], q: &[f64], k: usize) -> String {
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (v.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &(d, i) in &all[..k.min(all.len())] {
        let e = votes.entry(train[i].1.as_str()).or_default();
        e.0 += 1;
        e.1 += d;
    }
    let mut ranked: Vec<(&str, usize, f64)> = votes.into_iter().map(|(l, (c, s))| (l, c, s / c as f64)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.partial_cmp(&b.2).unwrap()).then(a.0.cmp(b.0)));
    ranked[0].0.to_string()
}

fn knn_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut queries = 0;
    for set in 0..1000 {
        let k = [1, 3, 5][rng.gen_range(0..3)];
        let n = rng.gen_range(k..=50);
        let dim = rng.gen_range(1..=28);
        let classes = rng.gen_range(1..=5);
        // half the datasets sit on a coarse grid so distance ties are common
        let coarse = set % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..dim).map(|_| if coarse { rng.gen_range(-2..=2) as f64 } else { rng.gen_range(-1.0..1.0) }).collect()
        };
        let train: Vec<(Vec<f64>, String)> =
            (0..n).map(|_| (draw(&mut rng), format!("c{}", rng.gen_range(0..classes)))).collect();
        let ds = LabeledDataset::new(
            train
                .iter()
                .enumerate()
                .map(|(i, (v, l))| Point::word_labeled(format!("{i:03}"), ClipEmbedding(v.clone()), "s", l.clone()))
                .collect(),
        )
        .unwrap();
        let model = KnnModel::new(ds, k).unwrap();
        for _ in 0..5 {
            let q = draw(&mut rng);
            let got = model.predict(&ClipEmbedding(q.clone())).unwrap().label;
            let want = brute_force(&train, &q, k);
            ensure(got == want, || format!("dataset {set}: predict {got} vs brute force {want}"))?;
            queries += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {}", secs(took)))?;
    Ok(format!("1000 datasets, {queries} queries, 100% agreement in {}", secs(took)))
}

// cepstral gain invariance

/// Smallest band energy over every frame of `clip`.
fn min_band_energy(ex: &FeatureExtractor, clip: &AudioClip) -> f64 {
    let cfg = &ex.config().frame;
    let window = cfg.window.coefficients(cfg.frame_len(clip.sample_rate()));
    frame_signal(clip, cfg)
        .unwrap()
        .iter()
        .flat_map(|f| {
            let windowed: Vec<f64> = f.iter().zip(&window).map(|(x, w)| x * w).collect();
            ex.bank().apply(&power_spectrum(&windowed, ex.bank().fft_size()))
        })
        .fold(f64::INFINITY, f64::min)
}

fn gain_invariance() -> Check {
    let extractors = [FeatureExtractor::standard(FeatureKind::Mel), FeatureExtractor::standard(FeatureKind::Gammatone)];
    let gains = [0.1, 2.0, 10.0];
    let threshold = 1e6 * LOG_FLOOR;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let (mut accepted, mut redrawn) = (0, 0);
    while accepted < 100 {
        let len = rng.gen_range(8_000..=16_000);
        // broadband noise peaking at 0.1, the loudest level whose x10 copy is still a valid clip
        let mut samples: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        samples.iter_mut().for_each(|v| *v *= 0.1 / peak);
        let clip = AudioClip::new(samples.clone(), 16_000).unwrap();
        let scaled: Vec<AudioClip> =
            gains.iter().map(|g| AudioClip::new(samples.iter().map(|s| s * g).collect(), 16_000).unwrap()).collect();
        // the invariance holds for clips whose band energies all exceed 1e6 * floor
        let in_domain = extractors
            .iter()
            .all(|ex| std::iter::once(&clip).chain(&scaled).all(|c| min_band_energy(ex, c) > threshold));
        if !in_domain {
            redrawn += 1;
            continue;
        }
        for ex in &extractors {
            let base = ex.cepstra(&clip).unwrap();
            for (g, other) in gains.iter().zip(&scaled) {
                let other = ex.cepstra(other).unwrap();
                for (frame, (a, b)) in base.rows.iter().zip(&other.rows).enumerate() {
                    let diff = (1..=13).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max);
                    worst = worst.max(diff);
                    ensure(diff <= 1e-6, || {
                        format!("clip {accepted} ({len} samples) {} g={g}: |diff| {diff:.3e} in frame {frame}", ex.kind())
                    })?;
                }
            }
        }
        accepted += 1;
    }
    Ok(format!(
        "100 noise clips (band energies > 1e6*eps; {redrawn} draws outside that domain redrawn) x g in {{0.1, 2, 10}}, MFCC+GTCC c1..c13 max |diff| {worst:.2e} <= 1e-6"
    ))
}

// filterbank

fn filterbank() -> Check {
    let mut tones = 0;
    for kind in [FeatureKind::Mel, FeatureKind::Gammatone] {
        let ex = FeatureExtractor::standard(kind);
        let bank = ex.bank();
        let expected = if kind == FeatureKind::Mel { 26 } else { 32 };
        ensure(bank.num_filters() == expected, || format!("{kind} bank has {} filters", bank.num_filters()))?;
        let n = bank.fft_size();
        let rate = bank.sample_rate() as f64;
        for (i, &fc) in bank.center_freqs().iter().enumerate() {
            let f = (fc * n as f64 / rate).round() * rate / n as f64;
            let tone: Vec<f64> = (0..n).map(|t| 0.5 * (2.0 * std::f64::consts::PI * f * t as f64 / rate).sin()).collect();
            let energies = bank.apply(&power_spectrum(&tone, n));
            let best = energies.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            ensure(best == i, || format!("{kind} filter {i} ({fc:.1} Hz): argmax is filter {best}"))?;
            tones += 1;
        }
    }
    let gt = FeatureExtractor::standard(FeatureKind::Gammatone);
    let mut worst = 0.0f64;
    for (i, &fc) in gt.bank().center_freqs().iter().enumerate() {
        let b = gammatone_bandwidth(fc);
        for f in [fc - b, fc + b] {
            worst = worst.max((gammatone_response(fc, f) - 0.0625).abs());
            worst = worst.max((gt.bank().response(i, f) - 0.0625).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("response at fc +- b off by {worst:.3e}"))?;
    let e = erb(1000.0);
    ensure((e - 132.639).abs() <= 1e-6, || format!("ERB(1000) = {e}"))?;
    Ok(format!("{tones}/58 argmax hits; |H(fc+-b) - 0.0625| <= {worst:.1e}; ERB(1000) = {e:.6} Hz"))
}

// DCT

fn dct_orthonormality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=64);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let back = idct_ii(&dct_ii(&x));
        for (a, b) in x.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-9, || format!("max error {worst:.3e}"))?;
    Ok(format!("1000 vectors, max error {worst:.2e} < 1e-9"))
}

// chess engine

fn move_command(mv: &Move) -> CommandEvent {
    CommandEvent::Move { piece: mv.piece, from: mv.from, to: mv.to, promotion: mv.promotion }
}

/// Leaf count by applying every legal move through the command interface.
fn enumerate(state: &GameState, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    state
        .legal_moves()
        .iter()
        .map(|mv| {
            let mut next = state.clone();
            apply_command(&mut next, &move_command(mv)).unwrap();
            enumerate(&next, depth - 1)
        })
        .sum()
}

fn chess_engine() -> Check {
    let start = Instant::now();
    let init = GameState::initial();
    let counts: Vec<u64> = (1..=3).map(|d| init.perft(d)).collect();
    let took = start.elapsed();
    ensure(counts == [20, 400, 8902], || format!("perft {counts:?}"))?;
    ensure(took < Duration::from_secs(5), || format!("perft took {}", secs(took)))?;
    let enumerated: Vec<u64> = (1..=3).map(|d| enumerate(&init, d)).collect();
    ensure(enumerated == counts, || format!("enumeration gave {enumerated:?}"))?;

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
            let applied = apply_command(&mut s, &move_command(&mv));
            ensure(matches!(applied, Ok(ApplyResult::Moved { .. })), || format!("{mv} rejected in {}", before.to_fen()))?;
            let mut undone = s.clone();
            apply_command(&mut undone, &CommandEvent::Undo).unwrap();
            ensure(undone == before, || format!("undo of {mv} from {} differs", before.to_fen()))?;
            steps += 1;
        }
    }
    Ok(format!("perft 20/400/8902 in {} (enumeration agrees); {steps} apply/undo steps identical", secs(took)))
}

// grammar

fn grammar_totality() -> Check {
    let vocab = Vocabulary::standard();
    let ids: Vec<&str> = vocab.word_ids().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tokens_fed = 0;
    let mut commands = 0;
    for stream in 0..10_000 {
        let len = rng.gen_range(0..40);
        let mut state = ParserState::new();
        for _ in 0..len {
            let t = *ids.choose(&mut rng).unwrap();
            let FeedOutcome { commands: cmds, error } = state.feed(&vocab, t);
            tokens_fed += 1;
            commands += cmds.len();
            ensure(cmds.len() <= 2, || format!("stream {stream}: {} commands from one word", cmds.len()))?;
            ensure(error.is_none() || state.is_idle(), || format!("stream {stream}: error left parser busy"))?;
            ensure(state.is_idle() == (state.expecting() == Slot::Command), || format!("stream {stream}: slot mismatch"))?;
            let (again, _) = ParserState::replay(&vocab, state.pending_tokens());
            ensure(again == state, || format!("stream {stream}: pending words do not reproduce state"))?;
        }
    }
    let (_, outcomes) = ParserState::replay(&vocab, &["at", "b", "1", "c", "3"]);
    let cmd = outcomes.last().unwrap().commands.first().cloned();
    let want = CommandEvent::Move {
        piece: chessvox_core::chess::PieceKind::Knight,
        from: "b1".parse().unwrap(),
        to: "c3".parse().unwrap(),
        promotion: None,
    };
    ensure(cmd.as_ref() == Some(&want), || format!("[at,b,1,c,3] gave {cmd:?}"))?;
    let mut game = GameState::initial();
    let applied = apply_command(&mut game, &want);
    ensure(matches!(applied, Ok(ApplyResult::Moved { .. })), || format!("knight b1c3 not applied: {applied:?}"))?;
    Ok(format!("10000 streams, {tokens_fed} words, {commands} commands, no undefined transition; at b 1 c 3 -> knight b1-c3 applied"))
}

// end-to-end fixture experiment

fn end_to_end(corpus: &Path) -> Check {
    let start = Instant::now();
    let summary = generate_corpus(corpus, &FixtureConfig::default()).map_err(|e| e.to_string())?;
    let generated = start.elapsed();
    ensure(summary.speakers == 10 && summary.words == 29 && summary.files == 2900, || format!("{summary:?}"))?;

    let cfg = EvalConfig {
        corpus_root: corpus.to_path_buf(),
        kinds: vec![FeatureKind::Gammatone],
        k_values: vec![1],
        train_frac: 0.7,
        seed: 42,
        use_cache: false,
        ..EvalConfig::default()
    };
    let start = Instant::now();
    let report = run_eval(&cfg).map_err(|e| e.to_string())?;
    let eval_time = start.elapsed();
    let person = report.runs.iter().find(|r| r.scope == EvalScope::PerSpeaker).ok_or("no per-speaker run")?;
    let general = report.runs.iter().find(|r| r.scope == EvalScope::General).ok_or("no general run")?;
    let (worst_subject, worst) = person
        .subjects
        .iter()
        .map(|s| (s.subject.clone(), s.metrics.overall))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .ok_or("no subjects")?;

    let text = render_text(&report);
    check_table(&text, person.subjects.len())?;

    let per_clip = clip_latency(corpus)?;

    ensure(person.subjects.len() == 10, || format!("{} subjects", person.subjects.len()))?;
    ensure(worst >= 95.0, || format!("subject {worst_subject} at {worst:.2}%"))?;
    ensure(general.overall >= 95.0, || format!("general {:.2}%", general.overall))?;
    ensure(per_clip.1 < Duration::from_millis(50), || format!("slowest clip {:?}", per_clip.1))?;
    ensure(eval_time < Duration::from_secs(120), || format!("eval took {}", secs(eval_time)))?;
    Ok(format!(
        "GTCC k=1: min subject {worst:.2}% ({worst_subject}), general {:.2}%; table layout ok; per clip mean {:.1} ms max {:.1} ms; eval {} (+{} synthesis)",
        general.overall,
        per_clip.0.as_secs_f64() * 1e3,
        per_clip.1.as_secs_f64() * 1e3,
        secs(eval_time),
        secs(generated)
    ))
}

fn check_table(text: &str, subjects: usize) -> Result<(), String> {
    let lines: Vec<&str> = text.lines().collect();
    let title = lines.first().copied().unwrap_or_default();
    ensure(title.starts_with("Average Result of Person-Based Classification"), || format!("title {title:?}"))?;
    let header = lines
        .iter()
        .position(|l| l.split_whitespace().collect::<Vec<_>>() == ["Subject", "SEN", "SEL", "SPE"])
        .ok_or("no Subject/SEN/SEL/SPE header")?;
    let rows: Vec<Vec<&str>> = lines[header + 1..]
        .iter()
        .take_while(|l| !l.trim().is_empty() && !l.starts_with("Subjects:"))
        .map(|l| l.split_whitespace().collect())
        .collect();
    ensure(rows.len() == subjects + 1, || format!("{} table rows", rows.len()))?;
    for (i, row) in rows.iter().enumerate() {
        let label = if i == subjects { "Average".to_string() } else { (i + 1).to_string() };
        ensure(row.len() == 4 && row[0] == label, || format!("row {row:?}"))?;
        for cell in &row[1..] {
            let two_dp = cell.split_once('.').is_some_and(|(_, f)| f.len() == 2) && cell.parse::<f64>().is_ok();
            ensure(two_dp, || format!("cell {cell:?} is not a 2-decimal value"))?;
        }
    }
    Ok(())
}

/// Mean and worst time from WAV bytes to a recognized word, over 100 clips.
fn clip_latency(corpus: &Path) -> Result<(Duration, Duration), String> {
    let svc = Service::new(ServiceConfig { corpus_root: corpus.to_path_buf(), ..ServiceConfig::default() })
        .map_err(|e| e.to_string())?;
    let id = svc
        .create_session(session_request(GameMode::TwoPlayer, false))
        .map_err(|e| e.to_string())?
        .session_id;
    let vocab = Vocabulary::standard();
    let words: Vec<&str> = vocab.word_ids().filter(|w| *w != "kapat").collect();
    let mut times = Vec::new();
    for i in 0..100 {
        let bytes = std::fs::read(take_path(corpus, 1 + i % 10, words[i % words.len()], 1 + i % 10)).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let out = svc.submit_audio(&id, &bytes).map_err(|e| e.to_string())?;
        times.push(start.elapsed());
        ensure(out.recognized.is_some(), || format!("clip {i} not recognized: {:?}", out.errors))?;
    }
    let mean = times.iter().sum::<Duration>() / times.len() as u32;
    Ok((mean, times.into_iter().max().unwrap()))
}

fn take_path(corpus: &Path, speaker: usize, word: &str, take: usize) -> std::path::PathBuf {
    corpus.join(format!("spk{speaker:02}")).join(word).join(format!("{take}.wav"))
}

// service serializability

fn session_request(mode: GameMode, confirm: bool) -> CreateSession {
    CreateSession {
        mode,
        play_method: ModelScope::Person("spk01".into()),
        feature_kind: Some(FeatureKind::Gammatone),
        k: Some(1),
        confirm_moves: Some(confirm),
        computer: None,
    }
}

#[derive(Debug, Clone)]
enum Op {
    Say(String, usize),
    Silence,
    Garbage,
    Peek,
    Confirm(bool),
}

fn script(seed: u64) -> Vec<Op> {
    let vocab = Vocabulary::standard();
    let words: Vec<String> = vocab.word_ids().filter(|w| *w != "kapat").map(String::from).collect();
    let phrases: [&[&str]; 6] = [
        &["piyon", "e", "2", "e", "4"],
        &["piyon", "e", "7", "e", "5"],
        &["at", "g", "1", "f", "3"],
        &["at", "b", "8", "c", "6"],
        &["piyon", "d", "2", "d", "4"],
        &["geri_al"],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::new();
    while ops.len() < 120 {
        match rng.gen_range(0..10) {
            0..=3 => {
                for w in *phrases.choose(&mut rng).unwrap() {
                    ops.push(Op::Say(w.to_string(), rng.gen_range(1..=10)));
                }
            }
            4 | 5 => ops.push(Op::Say(words.choose(&mut rng).unwrap().clone(), rng.gen_range(1..=10))),
            6 => ops.push(if rng.gen_bool(0.5) { Op::Silence } else { Op::Garbage }),
            7 => ops.push(Op::Peek),
            _ => ops.push(Op::Confirm(rng.gen_bool(0.7))),
        }
    }
    ops
}

#[derive(Debug, Default, PartialEq)]
struct Trace {
    fen: String,
    hash: String,
    failed_stages: usize,
}

fn run_script(svc: &Service, id: &str, corpus: &Path, ops: &[Op], silence: &[u8]) -> Result<Trace, String> {
    let mut trace = Trace::default();
    for (i, op) in ops.iter().enumerate() {
        let before = svc.get_state(id).map_err(|e| e.to_string())?.state_hash;
        let failed = match op {
            Op::Say(word, take) => {
                let bytes = std::fs::read(take_path(corpus, 1, word, *take)).map_err(|e| e.to_string())?;
                let out = svc.submit_audio(id, &bytes).map_err(|e| e.to_string())?;
                out.errors.iter().any(|e| matches!(e, StageError::AwaitingConfirmation))
            }
            Op::Silence => !svc.submit_audio(id, silence).map_err(|e| e.to_string())?.errors.is_empty(),
            Op::Garbage => !svc.submit_audio(id, b"RIFF????").map_err(|e| e.to_string())?.errors.is_empty(),
            Op::Peek => true,
            Op::Confirm(accept) => match svc.confirm_pending(id, *accept) {
                Ok(_) => false,
                Err(ServiceError::NoPending) => true,
                Err(e) => return Err(e.to_string()),
            },
        };
        if failed {
            trace.failed_stages += 1;
            let after = svc.get_state(id).map_err(|e| e.to_string())?.state_hash;
            ensure(after == before, || format!("op {i} {op:?} changed the state hash"))?;
        }
    }
    let snap = svc.get_state(id).map_err(|e| e.to_string())?;
    trace.fen = snap.fen;
    trace.hash = snap.state_hash;
    Ok(trace)
}

fn service_serializability(corpus: &Path) -> Check {
    let config = ServiceConfig { corpus_root: corpus.to_path_buf(), ..ServiceConfig::default() };
    let silence = encode_wav(&AudioClip::new(vec![0.0; 16_000], 16_000).unwrap());
    let scripts = [script(100), script(200)];
    let modes = [GameMode::TwoPlayer, GameMode::VsComputer];

    let svc = Arc::new(Service::new(config.clone()).map_err(|e| e.to_string())?);
    let ids: Vec<String> = modes
        .iter()
        .map(|&m| svc.create_session(session_request(m, true)).map(|s| s.session_id))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let traces: Vec<Result<Trace, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..2)
            .map(|i| {
                let (svc, id, ops, silence) = (&svc, &ids[i], &scripts[i], &silence);
                scope.spawn(move || run_script(svc, id, corpus, ops, silence))
            })
            .collect();
        // a third thread keeps reading both sessions
        scope.spawn(|| {
            for _ in 0..200 {
                for id in &ids {
                    let _ = svc.get_state(id);
                }
            }
        });
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let traces: Vec<Trace> = traces.into_iter().collect::<Result<_, _>>()?;

    let sequential = Service::new(config).map_err(|e| e.to_string())?;
    let mut events = 0;
    for (i, trace) in traces.iter().enumerate() {
        let log = svc.events(&ids[i]).map_err(|e| e.to_string())?;
        events += log.len();
        let replayed = SessionCore::replay(svc.vocabulary(), &log).ok_or("log does not replay")?;
        ensure(replayed.game().to_fen() == trace.fen, || format!("session {i}: replayed FEN differs"))?;
        ensure(replayed.state_hash() == trace.hash, || format!("session {i}: replayed hash differs"))?;
        ensure(replayed.events() == &log[..], || format!("session {i}: replayed log differs"))?;

        let id = sequential.create_session(session_request(modes[i], true)).map_err(|e| e.to_string())?.session_id;
        let alone = run_script(&sequential, &id, corpus, &scripts[i], &silence)?;
        ensure(&alone == trace, || format!("session {i}: concurrent {trace:?} vs sequential {alone:?}"))?;
        ensure(sequential.events(&id).map_err(|e| e.to_string())? == log, || format!("session {i}: logs differ from sequential run"))?;
    }
    let moved = traces.iter().filter(|t| t.fen != chessvox_core::chess::START_FEN).count();
    Ok(format!(
        "2 concurrent sessions, {events} events replayed to identical FEN/hash/log; {} failed stages left hashes unchanged; matches sequential run ({moved}/2 boards moved)",
        traces.iter().map(|t| t.failed_stages).sum::<usize>()
    ))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let corpus = dir.path().join("corpus");
    let checks: Vec<(&str, Box<CheckFn>)> = vec![
        ("metric formula fidelity", Box::new(metric_fidelity)),
        ("k-NN oracle equivalence", Box::new(knn_oracle)),
        ("cepstral gain invariance", Box::new(gain_invariance)),
        ("filterbank correctness", Box::new(filterbank)),
        ("DCT orthonormality", Box::new(dct_orthonormality)),
        ("chess engine", Box::new(chess_engine)),
        ("grammar totality", Box::new(grammar_totality)),
        ("end-to-end fixture experiment", Box::new(|| end_to_end(&corpus))),
        ("service serializability", Box::new(|| service_serializability(&corpus))),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
