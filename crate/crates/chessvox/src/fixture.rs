//! Synthetic corpus generator.
//!
//! Each word gets a vowel-like formant signature (F1, F2, F3 plus a glide),
//! each speaker a pitch, a formant scale and an extra high-band resonance.
//! Takes add seeded jitter and white noise.

use std::f64::consts::PI;
use std::path::Path;

use chessvox_core::audio::encode_wav;
use chessvox_core::vocabulary::Vocabulary;
use chessvox_core::AudioClip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusLayout;
use crate::profiles::{ProfileError, ProfileStore, SpeakerProfile, TakeRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureConfig {
    pub speakers: usize,
    pub takes_per_word: usize,
    pub seed: u64,
    pub sample_rate: u32,
    pub clip_seconds: f64,
    /// Length of the voiced part of each clip.
    pub voiced_seconds: f64,
    /// Signal-to-noise ratio of the added white noise.
    pub snr_db: f64,
    /// Extra noise confined to a band, for robustness experiments.
    pub band_noise: Option<BandNoise>,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            speakers: 10,
            takes_per_word: 10,
            seed: 42,
            sample_rate: 16_000,
            clip_seconds: 1.0,
            voiced_seconds: 0.5,
            snr_db: 30.0,
            band_noise: None,
        }
    }
}

/// Noise with energy between `low_hz` and `high_hz` at the given SNR
/// relative to the voiced signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandNoise {
    pub low_hz: f64,
    pub high_hz: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordSignature {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// Relative change of F2 from onset to offset.
    pub glide: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerVoice {
    pub f0: f64,
    pub formant_scale: f64,
    pub resonance_hz: f64,
}

const F1_GRID: [f64; 6] = [280.0, 365.0, 475.0, 615.0, 800.0, 1040.0];
const F2_GRID: [f64; 5] = [900.0, 1150.0, 1480.0, 1890.0, 2420.0];
const GLIDES: [f64; 3] = [-0.15, 0.0, 0.15];

/// Signature of the `index`-th vocabulary word.
pub fn word_signature(index: usize) -> WordSignature {
    let f1 = F1_GRID[index % F1_GRID.len()];
    let f2 = F2_GRID[(index / F1_GRID.len()) % F2_GRID.len()];
    WordSignature {
        f1,
        f2,
        f3: 2500.0 + 40.0 * (index % 7) as f64 + f2 * 0.3,
        glide: GLIDES[index % GLIDES.len()],
    }
}

/// Voice of the `index`-th speaker, spread evenly over the parameter ranges.
pub fn speaker_voice(index: usize, speakers: usize) -> SpeakerVoice {
    let t = if speakers > 1 { index as f64 / (speakers - 1) as f64 } else { 0.5 };
    // interleave so that neighbouring speakers differ in more than one parameter
    let u = ((index * 7) % speakers.max(1)) as f64 / speakers.max(1) as f64;
    SpeakerVoice {
        f0: 90.0 + 70.0 * t,
        formant_scale: 0.95 + 0.10 * u,
        resonance_hz: 3600.0 + 3000.0 * t,
    }
}

pub fn speaker_id(index: usize) -> String {
    format!("spk{:02}", index + 1)
}

struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, rate: f64) -> Self {
        let c = -(-2.0 * PI * bandwidth / rate).exp();
        let b = 2.0 * (-PI * bandwidth / rate).exp() * (2.0 * PI * freq / rate).cos();
        Self { a: 1.0 - b - c, b, c, y1: 0.0, y2: 0.0 }
    }

    fn retune(&mut self, freq: f64, bandwidth: f64, rate: f64) {
        let next = Self::new(freq, bandwidth, rate);
        self.a = next.a;
        self.b = next.b;
        self.c = next.c;
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn take_seed(seed: u64, speaker: usize, word: usize, take: usize) -> u64 {
    seed ^ (speaker as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (word as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (take as u64).wrapping_mul(0x1656_67B1_9E37_79F9)
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Renders one take. Deterministic in all arguments.
pub fn synthesize_take(cfg: &FixtureConfig, speaker: usize, word: usize, take: usize) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(take_seed(cfg.seed, speaker, word, take));
    let rate = cfg.sample_rate as f64;
    let voice = speaker_voice(speaker, cfg.speakers);
    let sig = word_signature(word);
    let n = (cfg.clip_seconds * rate).round() as usize;
    let voiced = ((cfg.voiced_seconds * rate).round() as usize).min(n);

    let f0 = voice.f0 * (1.0 + rng.gen_range(-0.02..0.02));
    let scale = voice.formant_scale * (1.0 + rng.gen_range(-0.01..0.01));
    let slack = n - voiced;
    let onset = if slack > 0 { slack / 2 + rng.gen_range(0..=slack / 4) - slack / 8 } else { 0 };

    let formants = [sig.f1 * scale, sig.f2 * scale, sig.f3 * scale];
    let mut res: Vec<Resonator> = formants
        .iter()
        .map(|&f| Resonator::new(f, 80.0 + 0.08 * f, rate))
        .collect();
    let mut speaker_res = Resonator::new(voice.resonance_hz, 250.0, rate);

    let ramp = (0.03 * rate) as usize;
    let mut phase = 0.0;
    let mut voiced_part = vec![0.0; voiced];
    for (i, out) in voiced_part.iter_mut().enumerate() {
        let t = i as f64 / voiced.max(1) as f64;
        // slow pitch drift plus per-period jitter
        let pitch = f0 * (1.0 + 0.04 * (PI * t).sin());
        phase += pitch / rate;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        let f2 = formants[1] * (1.0 + sig.glide * (t - 0.5));
        res[1].retune(f2, 80.0 + 0.08 * f2, rate);
        let mut y = pulse;
        for r in res.iter_mut() {
            y = r.step(y);
        }
        let extra = speaker_res.step(pulse);
        let env = if i < ramp {
            0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos()
        } else if voiced - i <= ramp {
            0.5 - 0.5 * (PI * (voiced - i) as f64 / ramp as f64).cos()
        } else {
            1.0
        };
        *out = env * (y + 0.35 * extra);
    }

    let peak = voiced_part.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = rng.gen_range(0.65..0.75) / peak.max(1e-12);
    voiced_part.iter_mut().for_each(|v| *v *= gain);

    let mut samples = vec![0.0; n];
    samples[onset..onset + voiced].copy_from_slice(&voiced_part);
    let signal_rms = rms(&voiced_part);
    let noise_std = signal_rms * 10f64.powf(-cfg.snr_db / 20.0);
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("finite noise level");
        samples.iter_mut().for_each(|s| *s += normal.sample(&mut rng));
    }
    if let Some(band) = cfg.band_noise {
        let noise = band_limited_noise(&mut rng, n, rate, band.low_hz, band.high_hz);
        let level = signal_rms * 10f64.powf(-band.snr_db / 20.0) / rms(&noise).max(1e-12);
        samples.iter_mut().zip(&noise).for_each(|(s, v)| *s += level * v);
    }
    AudioClip::from_samples_clamped(samples, cfg.sample_rate).expect("positive sample rate")
}

fn band_limited_noise(rng: &mut ChaCha8Rng, n: usize, rate: f64, low: f64, high: f64) -> Vec<f64> {
    let center = 0.5 * (low + high);
    let mut r1 = Resonator::new(center, (high - low).max(1.0), rate);
    let mut r2 = Resonator::new(center, (high - low).max(1.0), rate);
    (0..n).map(|_| r2.step(r1.step(rng.gen_range(-1.0..1.0)))).collect()
}

/// Counts of what [`generate_corpus`] wrote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub speakers: usize,
    pub words: usize,
    pub files: usize,
}

/// Writes `speakers x 29 x takes_per_word` WAV files under `root` and
/// registers a profile for every speaker.
pub fn generate_corpus(root: &Path, cfg: &FixtureConfig) -> Result<FixtureSummary, ProfileError> {
    let vocab = Vocabulary::standard();
    let layout = CorpusLayout::new(root);
    let mut store = ProfileStore::open(layout.clone())?;
    let words: Vec<&str> = vocab.word_ids().collect();
    let mut files = 0;
    for s in 0..cfg.speakers {
        let id = speaker_id(s);
        let mut profile = SpeakerProfile::new(&id, format!("Synthetic speaker {}", s + 1));
        for (w, word) in words.iter().enumerate() {
            let records = (1..=cfg.takes_per_word)
                .map(|t| {
                    let clip = synthesize_take(cfg, s, w, t);
                    let path = layout.take_path(&id, word, t);
                    layout.write_take(&path, &encode_wav(&clip))?;
                    files += 1;
                    Ok(TakeRecord {
                        path: layout.relative(&path),
                        duration: clip.duration_seconds(),
                        accepted: true,
                    })
                })
                .collect::<Result<Vec<_>, ProfileError>>()?;
            profile.takes.insert(word.to_string(), records);
        }
        store.upsert(profile)?;
    }
    Ok(FixtureSummary { speakers: cfg.speakers, words: words.len(), files })
}
