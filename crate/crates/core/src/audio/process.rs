use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::math;

/// Default trimming threshold.
pub const DEFAULT_THRESHOLD_DBFS: f64 = -40.0;
/// Default padding kept on either side of trimmed speech.
pub const DEFAULT_PAD_MS: f64 = 100.0;

const TRIM_WINDOW_MS: f64 = 10.0;

/// Root-mean-square amplitude; zero for an empty slice.
pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let energy: f64 = samples.iter().map(|s| s * s).sum();
    math::sqrt(energy / samples.len() as f64)
}

/// RMS level in dBFS (full-scale amplitude 1.0 is 0 dBFS).
pub fn rms_dbfs(samples: &[f64]) -> f64 {
    math::rms_to_dbfs(rms(samples))
}

/// Linear-interpolation resampling.
///
/// Output length is `round(len * target / source)`. Returns the input
/// unchanged when the rates already agree.
///
/// # Panics
/// If `target_rate` is zero.
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target sample rate must be positive");
    let source_rate = clip.sample_rate();
    if source_rate == target_rate {
        return clip.clone();
    }
    let input = clip.samples();
    let ratio = source_rate as f64 / target_rate as f64;
    let out_len = math::round(input.len() as f64 * target_rate as f64 / source_rate as f64) as usize;
    let last = input.len().saturating_sub(1);
    let samples: Vec<f64> = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = (math::floor(pos) as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = pos - i0 as f64;
            let (x0, x1) = (input[i0], input[i1]);
            (x0 + (x1 - x0) * frac).clamp(-1.0, 1.0)
        })
        .collect();
    let mut out = AudioClip::new(samples, target_rate).expect("interpolated samples stay in range");
    if let Some(id) = clip.source_id() {
        out = out.with_source_id(id);
    }
    out
}

/// Cuts leading and trailing quiet.
///
/// The signal is scanned in consecutive 10 ms windows; the result runs from
/// the first to the last window whose RMS level exceeds `threshold_dbfs`,
/// widened by `pad_ms` on each side and clamped to the clip. A clip with no
/// loud window is returned unchanged.
pub fn trim_silence(clip: &AudioClip, threshold_dbfs: f64, pad_ms: f64) -> AudioClip {
    let rate = clip.sample_rate() as f64;
    let window = (math::round(rate * TRIM_WINDOW_MS / 1000.0) as usize).max(1);
    let pad = math::round(rate * pad_ms.max(0.0) / 1000.0) as usize;
    let samples = clip.samples();

    let mut loud = samples
        .chunks(window)
        .enumerate()
        .filter(|(_, w)| rms_dbfs(w) > threshold_dbfs)
        .map(|(i, _)| i);
    let Some(first) = loud.next() else {
        return clip.clone();
    };
    let last = loud.next_back().unwrap_or(first);

    let start = (first * window).saturating_sub(pad);
    let end = ((last + 1) * window).min(samples.len()).saturating_add(pad).min(samples.len());
    clip.slice(start, end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationReason {
    Ok,
    TooQuiet,
    TooShort,
    TooLong,
    Clipped,
}

/// Verdict on a recorded take. `reason == Ok` exactly when `accepted`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TakeValidation {
    pub accepted: bool,
    pub reason: ValidationReason,
}

impl TakeValidation {
    fn from_reason(reason: ValidationReason) -> Self {
        Self {
            accepted: reason == ValidationReason::Ok,
            reason,
        }
    }
}

/// Thresholds applied by [`validate_take_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationLimits {
    pub min_rms_dbfs: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub clip_level: f64,
    pub max_clipped_fraction: f64,
    pub trim_threshold_dbfs: f64,
    pub trim_pad_ms: f64,
}

impl Default for ValidationLimits {
    fn default() -> Self {
        Self {
            min_rms_dbfs: -45.0,
            min_seconds: 0.2,
            max_seconds: 2.0,
            clip_level: 0.999,
            max_clipped_fraction: 0.01,
            trim_threshold_dbfs: DEFAULT_THRESHOLD_DBFS,
            trim_pad_ms: DEFAULT_PAD_MS,
        }
    }
}

/// Checks a take with the default limits.
pub fn validate_take(clip: &AudioClip) -> TakeValidation {
    validate_take_with(clip, &ValidationLimits::default())
}

/// Checks loudness, trimmed duration and clipping, in that order; the first
/// failing check decides the reason.
pub fn validate_take_with(clip: &AudioClip, limits: &ValidationLimits) -> TakeValidation {
    if clip.is_empty() || rms_dbfs(clip.samples()) < limits.min_rms_dbfs {
        return TakeValidation::from_reason(ValidationReason::TooQuiet);
    }
    let trimmed = trim_silence(clip, limits.trim_threshold_dbfs, limits.trim_pad_ms);
    let seconds = trimmed.duration_seconds();
    if seconds < limits.min_seconds {
        return TakeValidation::from_reason(ValidationReason::TooShort);
    }
    if seconds > limits.max_seconds {
        return TakeValidation::from_reason(ValidationReason::TooLong);
    }
    let clipped = clip
        .samples()
        .iter()
        .filter(|s| s.abs() >= limits.clip_level)
        .count();
    if clipped as f64 > limits.max_clipped_fraction * clip.len() as f64 {
        return TakeValidation::from_reason(ValidationReason::Clipped);
    }
    TakeValidation::from_reason(ValidationReason::Ok)
}
