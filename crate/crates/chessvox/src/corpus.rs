//! On-disk corpus: `root/<speaker>/<word>/<take>.wav`, loaded into a
//! labelled embedding dataset.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chessvox_core::audio::decode_wav;
use chessvox_core::classifier::{LabeledDataset, Point};
use chessvox_core::features::{FeatureConfig, FeatureExtractor};
use chessvox_core::vocabulary::Vocabulary;
use chessvox_core::{ClipEmbedding, FeatureKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const PROFILE_INDEX: &str = "profiles.json";
const CACHE_DIR: &str = ".cache";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("reading corpus: {0}")]
    Io(#[from] io::Error),
    #[error("embedding cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLayout {
    root: PathBuf,
}

impl CorpusLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(PROFILE_INDEX)
    }

    pub fn speaker_dir(&self, speaker: &str) -> PathBuf {
        self.root.join(speaker)
    }

    /// Takes are numbered from 1.
    pub fn take_path(&self, speaker: &str, word: &str, take: usize) -> PathBuf {
        self.root.join(speaker).join(word).join(format!("{take}.wav"))
    }

    pub fn cache_path(&self, kind: FeatureKind) -> PathBuf {
        self.root.join(CACHE_DIR).join(format!("embeddings-{}.json", kind.acronym().to_lowercase()))
    }

    /// `path` relative to the root with `/` separators.
    pub fn relative(&self, path: &Path) -> String {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Writes through a temporary file so readers never see a partial WAV.
    pub fn write_take(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("wav.tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)
    }
}

/// A WAV file found in the corpus tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TakeEntry {
    pub speaker: String,
    pub word: String,
    pub take: usize,
    pub path: PathBuf,
    /// Root-relative path; also the point id.
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

fn sorted_entries(dir: &Path) -> io::Result<Vec<fs::DirEntry>> {
    let mut entries = fs::read_dir(dir)?.collect::<io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

fn visible(entry: &fs::DirEntry) -> Option<String> {
    let name = entry.file_name().to_string_lossy().into_owned();
    (!name.starts_with('.')).then_some(name)
}

/// Lists every take in lexicographic path order. Files that do not fit the
/// layout are reported, not fatal.
pub fn scan(layout: &CorpusLayout, vocab: &Vocabulary) -> Result<(Vec<TakeEntry>, Vec<SkippedFile>), CorpusError> {
    if !layout.root.is_dir() {
        return Err(CorpusError::MissingRoot(layout.root.clone()));
    }
    let mut takes = Vec::new();
    let mut skipped = Vec::new();
    for speaker in sorted_entries(&layout.root)? {
        let Some(speaker_name) = visible(&speaker) else { continue };
        if !speaker.file_type()?.is_dir() {
            continue;
        }
        for word in sorted_entries(&speaker.path())? {
            let Some(word_name) = visible(&word) else { continue };
            let rel = layout.relative(&word.path());
            if !word.file_type()?.is_dir() {
                skipped.push(SkippedFile { path: rel, reason: "not a word directory".into() });
                continue;
            }
            if !vocab.contains(&word_name) {
                skipped.push(SkippedFile { path: rel, reason: format!("unknown word {word_name:?}") });
                continue;
            }
            for file in sorted_entries(&word.path())? {
                let Some(file_name) = visible(&file) else { continue };
                let path = file.path();
                let id = layout.relative(&path);
                let take = file_name.strip_suffix(".wav").and_then(|s| s.parse::<usize>().ok()).filter(|&t| t >= 1);
                match take {
                    Some(take) => takes.push(TakeEntry {
                        speaker: speaker_name.clone(),
                        word: word_name.clone(),
                        take,
                        path,
                        id,
                    }),
                    None => skipped.push(SkippedFile { path: id, reason: "not a numbered .wav take".into() }),
                }
            }
        }
    }
    takes.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((takes, skipped))
}

/// Embeddings keyed by the SHA-256 of the WAV bytes, valid for one
/// feature configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCache {
    pub config: FeatureConfig,
    pub entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingCache {
    pub fn empty(config: FeatureConfig) -> Self {
        Self { config, entries: BTreeMap::new() }
    }

    /// Reads a cache file; a missing file or one written for another
    /// configuration yields an empty cache.
    pub fn load(path: &Path, config: &FeatureConfig) -> Result<Self, CorpusError> {
        match fs::read(path) {
            Ok(bytes) => {
                let cache: Self = serde_json::from_slice(&bytes).map_err(|e| CorpusError::Cache(e.to_string()))?;
                Ok(if &cache.config == config { cache } else { Self::empty(config.clone()) })
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Self::empty(config.clone())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let json = serde_json::to_vec(self).map_err(|e| CorpusError::Cache(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, json)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusLoad {
    pub dataset: LabeledDataset,
    pub skipped: Vec<SkippedFile>,
}

/// Loads with the standard extractor for `kind` and no cache.
pub fn load_corpus(layout: &CorpusLayout, kind: FeatureKind) -> Result<CorpusLoad, CorpusError> {
    load_corpus_with(layout, &FeatureExtractor::standard(kind), None)
}

/// Decodes, trims and embeds every take (in parallel), labelling points by
/// word. Points keep lexicographic path order.
pub fn load_corpus_with(
    layout: &CorpusLayout,
    extractor: &FeatureExtractor,
    cache: Option<&mut EmbeddingCache>,
) -> Result<CorpusLoad, CorpusError> {
    let vocab = Vocabulary::standard();
    let (takes, mut skipped) = scan(layout, &vocab)?;
    let known = cache.as_deref().filter(|c| &c.config == extractor.config());
    let results: Vec<Result<(String, Vec<f64>), String>> = takes
        .par_iter()
        .map(|t| {
            let bytes = fs::read(&t.path).map_err(|e| e.to_string())?;
            let hash = content_hash(&bytes);
            if let Some(hit) = known.and_then(|c| c.entries.get(&hash)) {
                return Ok((hash, hit.clone()));
            }
            let clip = decode_wav(&bytes).map_err(|e| e.to_string())?;
            let emb = extractor.embed_raw(&clip).map_err(|e| e.to_string())?;
            Ok((hash, emb.0))
        })
        .collect();

    let mut points = Vec::with_capacity(takes.len());
    let mut fresh = Vec::new();
    for (take, result) in takes.into_iter().zip(results) {
        match result {
            Ok((hash, values)) => {
                fresh.push((hash, values.clone()));
                points.push(Point::word_labeled(take.id, ClipEmbedding(values), take.speaker, take.word));
            }
            Err(reason) => skipped.push(SkippedFile { path: take.id, reason }),
        }
    }
    skipped.sort_by(|a, b| a.path.cmp(&b.path));
    if let Some(cache) = cache {
        if &cache.config != extractor.config() {
            *cache = EmbeddingCache::empty(extractor.config().clone());
        }
        cache.entries.extend(fresh);
    }
    let dataset = LabeledDataset::new(points).expect("one extractor yields one embedding dimension");
    Ok(CorpusLoad { dataset, skipped })
}

/// Loads through the cache file kept under the corpus root.
pub fn load_corpus_cached(layout: &CorpusLayout, extractor: &FeatureExtractor) -> Result<CorpusLoad, CorpusError> {
    let path = layout.cache_path(extractor.kind());
    let mut cache = EmbeddingCache::load(&path, extractor.config())?;
    let before = cache.len();
    let load = load_corpus_with(layout, extractor, Some(&mut cache))?;
    if cache.len() != before {
        cache.save(&path)?;
    }
    Ok(load)
}

/// Feature dump written by the `extract` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDump {
    pub config: FeatureConfig,
    pub points: Vec<Point>,
    pub skipped: Vec<SkippedFile>,
}

impl FeatureDump {
    pub fn new(config: FeatureConfig, load: CorpusLoad) -> Self {
        Self { config, points: load.dataset.points().to_vec(), skipped: load.skipped }
    }
}
