#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chessvox::config::ServiceConfig;
use chessvox::fixture::{generate_corpus, FixtureConfig};
use chessvox::service::Service;
use chessvox_core::audio::encode_wav;
use chessvox_core::AudioClip;

pub struct Corpus {
    _dir: tempfile::TempDir,
    pub root: PathBuf,
    pub config: FixtureConfig,
}

/// Two speakers, 4 takes per word; shared by every test in a binary.
pub fn small_corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| make_corpus(FixtureConfig { speakers: 2, takes_per_word: 4, ..FixtureConfig::default() }))
}

pub fn make_corpus(config: FixtureConfig) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("corpus");
    generate_corpus(&root, &config).unwrap();
    Corpus { _dir: dir, root, config }
}

/// Bytes of a stored take; its embedding is in the training set.
pub fn take_bytes(root: &Path, speaker: &str, word: &str, take: usize) -> Vec<u8> {
    std::fs::read(root.join(speaker).join(word).join(format!("{take}.wav"))).unwrap()
}

pub fn silence_wav(seconds: f64) -> Vec<u8> {
    encode_wav(&AudioClip::new(vec![0.0; (seconds * 16_000.0) as usize], 16_000).unwrap())
}

pub fn service_config(root: &Path) -> ServiceConfig {
    ServiceConfig { corpus_root: root.to_path_buf(), confirm_moves: false, ..ServiceConfig::default() }
}

pub fn service(root: &Path) -> Service {
    Service::new(service_config(root)).unwrap()
}
