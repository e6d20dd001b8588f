use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fft::FftPlan;
use super::FeatureError;
use crate::math;
use crate::AudioClip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Window {
    Hamming,
    Hann,
    Rectangular,
}

impl Window {
    /// Symmetric window coefficients of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len <= 1 {
            return vec![1.0; len];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|n| {
                let c = math::cos(2.0 * PI * n as f64 / denom);
                match self {
                    Window::Hamming => 0.54 - 0.46 * c,
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

/// Frame length, hop and window shape. `0 < hop_ms <= frame_len_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len_ms: 25.0,
            hop_ms: 10.0,
            window: Window::Hamming,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !(self.hop_ms > 0.0 && self.hop_ms <= self.frame_len_ms) {
            return Err(FeatureError::InvalidConfig("need 0 < hop_ms <= frame_len_ms"));
        }
        Ok(())
    }

    pub fn frame_len(&self, sample_rate: u32) -> usize {
        (math::round(self.frame_len_ms * sample_rate as f64 / 1000.0) as usize).max(1)
    }

    pub fn hop(&self, sample_rate: u32) -> usize {
        (math::round(self.hop_ms * sample_rate as f64 / 1000.0) as usize).max(1)
    }
}

/// Splits a clip into overlapping frames.
///
/// Frames start every `hop` samples; if samples remain after the last full
/// frame, one more frame starting at the next hop is zero-padded to length.
pub fn frame_signal(clip: &AudioClip, cfg: &FrameConfig) -> Result<Vec<Vec<f64>>, FeatureError> {
    cfg.validate()?;
    let len = cfg.frame_len(clip.sample_rate());
    let hop = cfg.hop(clip.sample_rate());
    let samples = clip.samples();
    if samples.len() < len {
        return Err(FeatureError::ClipTooShort {
            samples: samples.len(),
            frame_len: len,
        });
    }
    let full = 1 + (samples.len() - len) / hop;
    let mut frames: Vec<Vec<f64>> = (0..full)
        .map(|i| samples[i * hop..i * hop + len].to_vec())
        .collect();
    let covered = (full - 1) * hop + len;
    if samples.len() > covered {
        let start = full * hop;
        let mut tail = vec![0.0; len];
        if start < samples.len() {
            let rest = &samples[start..];
            tail[..rest.len()].copy_from_slice(rest);
        }
        frames.push(tail);
    }
    Ok(frames)
}

/// Squared DFT magnitudes for bins `0..=fft_size/2` of a zero-padded frame.
///
/// # Panics
/// If `fft_size` is not a power of two or is shorter than the frame.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Vec<f64> {
    power_spectrum_with(&FftPlan::new(fft_size), frame)
}

pub(crate) fn power_spectrum_with(plan: &FftPlan, frame: &[f64]) -> Vec<f64> {
    let spectrum = plan.forward_real(frame);
    spectrum[..plan.size() / 2 + 1]
        .iter()
        .map(|c| c.norm_sqr())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(n: usize) -> AudioClip {
        AudioClip::new(vec![0.1; n], 16_000).unwrap()
    }

    fn frames_cfg(len_ms: f64, hop_ms: f64) -> FrameConfig {
        FrameConfig { frame_len_ms: len_ms, hop_ms, window: Window::Hamming }
    }

    #[test]
    fn single_frame() {
        let frames = frame_signal(&clip(400), &frames_cfg(25.0, 10.0)).unwrap();
        assert_eq!(frames.len(), 1);
    }

    #[test]
    fn one_second_gives_99_frames() {
        // count by enumeration: start positions 0,160,.. with start+400 <= 16000
        let full = (0..).map(|i| i * 160).take_while(|s| s + 400 <= 16_000).count();
        assert_eq!(full, 98);
        let frames = frame_signal(&clip(16_000), &frames_cfg(25.0, 10.0)).unwrap();
        assert_eq!(frames.len(), full + 1);
        let tail = frames.last().unwrap();
        // padded frame starts at 98*160 = 15680, 320 real samples
        assert!(tail[..320].iter().all(|&x| x == 0.1));
        assert!(tail[320..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn too_short() {
        assert_eq!(
            frame_signal(&clip(399), &frames_cfg(25.0, 10.0)),
            Err(FeatureError::ClipTooShort { samples: 399, frame_len: 400 })
        );
    }

    #[test]
    fn bad_hop() {
        assert!(frame_signal(&clip(800), &frames_cfg(25.0, 30.0)).is_err());
        assert!(frame_signal(&clip(800), &frames_cfg(25.0, 0.0)).is_err());
    }

    #[test]
    fn zero_frame_zero_spectrum() {
        assert!(power_spectrum(&[0.0; 400], 512).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn bin_aligned_cosine() {
        let n = 64;
        let k = 5;
        let frame: Vec<f64> = (0..n)
            .map(|t| libm::cos(2.0 * PI * (k * t) as f64 / n as f64))
            .collect();
        let p = power_spectrum(&frame, n);
        assert_eq!(p.len(), n / 2 + 1);
        let expected = (n * n) as f64 / 4.0;
        for (bin, &v) in p.iter().enumerate() {
            if bin == k {
                assert!((v - expected).abs() < 1e-9 * expected);
            } else {
                assert!(v < 1e-18 * expected, "bin {bin} = {v}");
            }
        }
    }

    #[test]
    fn windows() {
        let h = Window::Hamming.coefficients(5);
        assert!((h[0] - 0.08).abs() < 1e-12 && (h[2] - 1.0).abs() < 1e-12);
        let w = Window::Hann.coefficients(5);
        assert!(w[0].abs() < 1e-12 && (w[4]).abs() < 1e-12);
        assert_eq!(Window::Rectangular.coefficients(3), vec![1.0; 3]);
    }
}
