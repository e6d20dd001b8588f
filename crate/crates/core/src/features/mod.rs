//! Cepstral features: framing, windowing, power spectrum, mel or gammatone
//! filterbank, log compression and DCT.
//!
//! MFCC and GTCC share one code path ([`cepstra`]); only the [`FilterBank`]
//! passed in differs.

mod dct;
mod fft;
mod filterbank;
mod frame;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dct::{dct_ii, idct_ii, Dct};
pub use filterbank::{
    erb, erb_rate_to_hz, gammatone_bandwidth, gammatone_response, hz_to_erb_rate, hz_to_mel,
    mel_to_hz, FilterBank,
};
pub use frame::{frame_signal, power_spectrum, FrameConfig, Window};

use crate::audio::{self, AudioClip};
use crate::math;
use fft::FftPlan;

/// Floor added to band energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
/// Coefficients kept per frame, including the 0th.
pub const DEFAULT_NUM_COEFFS: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("clip has {samples} samples, shorter than one {frame_len}-sample frame")]
    ClipTooShort { samples: usize, frame_len: usize },
    #[error("filterbank is degenerate: centers {low_hz:.1} Hz and {high_hz:.1} Hz share an FFT bin")]
    DegenerateBank { low_hz: f64, high_hz: f64 },
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("clip sample rate {clip} Hz does not match filterbank rate {bank} Hz")]
    SampleRateMismatch { clip: u32, bank: u32 },
    #[error("feature matrix has no frames")]
    EmptyFeatures,
}

/// Which filterbank the cepstra are computed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureKind {
    /// MFCC.
    Mel,
    /// GTCC.
    Gammatone,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 2] = [FeatureKind::Mel, FeatureKind::Gammatone];

    /// Conventional acronym of the resulting coefficients.
    pub fn acronym(self) -> &'static str {
        match self {
            FeatureKind::Mel => "MFCC",
            FeatureKind::Gammatone => "GTCC",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.acronym())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mel" | "mfcc" => Ok(FeatureKind::Mel),
            "gammatone" | "gtcc" => Ok(FeatureKind::Gammatone),
            _ => Err(FeatureError::InvalidConfig("feature kind must be mfcc or gtcc")),
        }
    }
}

/// Per-frame cepstral vectors; every row has `num_coeffs` finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub num_coeffs: usize,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn num_frames(&self) -> usize {
        self.rows.len()
    }
}

/// Fixed-length clip summary: per-coefficient means followed by
/// per-coefficient population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClipEmbedding(pub Vec<f64>);

impl ClipEmbedding {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &ClipEmbedding) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Cepstral coefficients of every frame of `clip`.
///
/// Per frame: window, power spectrum, filterbank, `ln(energy + LOG_FLOOR)`,
/// orthonormal DCT-II, keep coefficients `0..num_coeffs`.
pub fn cepstra(clip: &AudioClip, bank: &FilterBank, cfg: &FrameConfig, num_coeffs: usize) -> Result<FeatureMatrix, FeatureError> {
    let plan = FftPlan::new(bank.fft_size());
    let dct = Dct::new(bank.num_filters());
    cepstra_with(clip, bank, cfg, num_coeffs, &plan, &dct)
}

fn cepstra_with(
    clip: &AudioClip,
    bank: &FilterBank,
    cfg: &FrameConfig,
    num_coeffs: usize,
    plan: &FftPlan,
    dct: &Dct,
) -> Result<FeatureMatrix, FeatureError> {
    if clip.sample_rate() != bank.sample_rate() {
        return Err(FeatureError::SampleRateMismatch {
            clip: clip.sample_rate(),
            bank: bank.sample_rate(),
        });
    }
    if num_coeffs == 0 || num_coeffs > bank.num_filters() {
        return Err(FeatureError::InvalidConfig("need 1 <= num_coeffs <= num_filters"));
    }
    if cfg.frame_len(clip.sample_rate()) > bank.fft_size() {
        return Err(FeatureError::InvalidConfig("frame longer than fft size"));
    }
    let frames = frame::frame_signal(clip, cfg)?;
    let window = cfg.window.coefficients(cfg.frame_len(clip.sample_rate()));
    let rows = frames
        .iter()
        .map(|f| {
            let windowed: Vec<f64> = f.iter().zip(&window).map(|(x, w)| x * w).collect();
            let power = frame::power_spectrum_with(plan, &windowed);
            let log_energy: Vec<f64> = bank
                .apply(&power)
                .into_iter()
                .map(|e| math::ln(e + LOG_FLOOR))
                .collect();
            dct.forward(&log_energy, num_coeffs)
        })
        .collect();
    Ok(FeatureMatrix {
        kind: bank.kind(),
        num_coeffs,
        rows,
    })
}

/// Mean and population standard deviation of each coefficient across frames.
pub fn embed_clip(features: &FeatureMatrix) -> Result<ClipEmbedding, FeatureError> {
    let n = features.rows.len();
    if n == 0 {
        return Err(FeatureError::EmptyFeatures);
    }
    let dim = features.num_coeffs;
    let mut mean = alloc::vec![0.0; dim];
    for row in &features.rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = alloc::vec![0.0; dim];
    for row in &features.rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| math::sqrt(s / n as f64));
    let mut values = mean;
    values.extend(std);
    Ok(ClipEmbedding(values))
}

/// Every knob of the feature pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub sample_rate: u32,
    pub frame: FrameConfig,
    pub fft_size: usize,
    pub num_filters: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub num_coeffs: usize,
}

impl FeatureConfig {
    /// 16 kHz, 25/10 ms Hamming frames, 512-point FFT, 50 Hz to Nyquist,
    /// 14 coefficients; 26 mel or 32 gammatone filters.
    pub fn standard(kind: FeatureKind) -> Self {
        let sample_rate = audio::CANONICAL_SAMPLE_RATE;
        Self {
            kind,
            sample_rate,
            frame: FrameConfig::default(),
            fft_size: 512,
            num_filters: match kind {
                FeatureKind::Mel => 26,
                FeatureKind::Gammatone => 32,
            },
            f_min: 50.0,
            f_max: sample_rate as f64 / 2.0,
            num_coeffs: DEFAULT_NUM_COEFFS,
        }
    }
}

/// A ready-to-run pipeline with the filterbank, FFT plan and DCT prebuilt.
/// Immutable once built, so one extractor can serve many threads.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    bank: FilterBank,
    plan: FftPlan,
    dct: Dct,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Result<Self, FeatureError> {
        config.frame.validate()?;
        let bank = FilterBank::build(
            config.kind,
            config.sample_rate,
            config.fft_size,
            config.num_filters,
            config.f_min,
            config.f_max,
        )?;
        if config.num_coeffs == 0 || config.num_coeffs > config.num_filters {
            return Err(FeatureError::InvalidConfig("need 1 <= num_coeffs <= num_filters"));
        }
        Ok(Self {
            plan: FftPlan::new(config.fft_size),
            dct: Dct::new(config.num_filters),
            bank,
            config,
        })
    }

    pub fn standard(kind: FeatureKind) -> Self {
        Self::new(FeatureConfig::standard(kind)).expect("standard feature configuration is valid")
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn kind(&self) -> FeatureKind {
        self.config.kind
    }

    /// Cepstra of a clip already at the configured sample rate.
    pub fn cepstra(&self, clip: &AudioClip) -> Result<FeatureMatrix, FeatureError> {
        cepstra_with(clip, &self.bank, &self.config.frame, self.config.num_coeffs, &self.plan, &self.dct)
    }

    pub fn embed(&self, clip: &AudioClip) -> Result<ClipEmbedding, FeatureError> {
        embed_clip(&self.cepstra(clip)?)
    }

    /// Resamples to the configured rate, trims silence with the default
    /// settings, then embeds. This is the path every recorded take follows.
    pub fn embed_raw(&self, clip: &AudioClip) -> Result<ClipEmbedding, FeatureError> {
        self.embed(&self.preprocess(clip))
    }

    pub fn preprocess(&self, clip: &AudioClip) -> AudioClip {
        let clip = audio::resample(clip, self.config.sample_rate);
        audio::trim_silence(&clip, audio::DEFAULT_THRESHOLD_DBFS, audio::DEFAULT_PAD_MS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn tone(freq: f64, amp: f64) -> AudioClip {
        let samples = (0..16_000)
            .map(|i| amp * libm::sin(2.0 * PI * freq * i as f64 / 16_000.0))
            .collect();
        AudioClip::new(samples, 16_000).unwrap()
    }

    #[test]
    fn silent_clip_gives_floor_cepstrum() {
        for kind in FeatureKind::ALL {
            let ex = FeatureExtractor::standard(kind);
            let clip = AudioClip::new(vec![0.0; 4000], 16_000).unwrap();
            let m = ex.cepstra(&clip).unwrap();
            let nf = ex.config().num_filters as f64;
            for row in &m.rows {
                assert!((row[0] - libm::sqrt(nf) * libm::log(LOG_FLOOR)).abs() < 1e-9);
                assert!(row[1..].iter().all(|c| c.abs() < 1e-9));
            }
        }
    }

    #[test]
    fn distinct_tones_distinct_embeddings() {
        for kind in FeatureKind::ALL {
            let ex = FeatureExtractor::standard(kind);
            let a = ex.embed(&tone(440.0, 0.5)).unwrap();
            let b = ex.embed(&tone(2000.0, 0.5)).unwrap();
            assert_eq!(a.dim(), 28);
            assert!(a.distance(&b) > 0.0);
        }
    }

    #[test]
    fn gain_changes_only_c0() {
        let ex = FeatureExtractor::standard(FeatureKind::Gammatone);
        let clip = tone(700.0, 0.2);
        let a = ex.cepstra(&clip).unwrap();
        let b = ex.cepstra(&clip.scaled(2.0)).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((rb[0] - ra[0] - libm::sqrt(32.0) * libm::log(4.0)).abs() < 1e-4);
            for c in 1..14 {
                assert!((ra[c] - rb[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn embedding_edge_cases() {
        let v: Vec<f64> = (0..14).map(|i| i as f64 - 6.5).collect();
        let single = FeatureMatrix { kind: FeatureKind::Mel, num_coeffs: 14, rows: vec![v.clone()] };
        let e = embed_clip(&single).unwrap();
        assert_eq!(&e.values()[..14], &v[..]);
        assert!(e.values()[14..].iter().all(|&s| s == 0.0));

        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let pair = FeatureMatrix { kind: FeatureKind::Mel, num_coeffs: 14, rows: vec![v.clone(), neg] };
        let e = embed_clip(&pair).unwrap();
        assert!(e.values()[..14].iter().all(|&m| m == 0.0));
        for (s, x) in e.values()[14..].iter().zip(&v) {
            assert!((s - x.abs()).abs() < 1e-12);
        }

        let empty = FeatureMatrix { kind: FeatureKind::Mel, num_coeffs: 14, rows: vec![] };
        assert_eq!(embed_clip(&empty), Err(FeatureError::EmptyFeatures));
    }

    #[test]
    fn rate_mismatch_and_kind_parsing() {
        let ex = FeatureExtractor::standard(FeatureKind::Mel);
        let clip = AudioClip::new(vec![0.0; 8000], 8000).unwrap();
        assert!(matches!(ex.cepstra(&clip), Err(FeatureError::SampleRateMismatch { .. })));
        assert_eq!("gtcc".parse::<FeatureKind>().unwrap(), FeatureKind::Gammatone);
        assert_eq!("MFCC".parse::<FeatureKind>().unwrap(), FeatureKind::Mel);
        assert!("lpc".parse::<FeatureKind>().is_err());
    }
}
