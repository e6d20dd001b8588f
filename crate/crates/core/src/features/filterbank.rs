//! Mel triangular and gammatone filterbanks sampled onto FFT bins.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureKind};
use crate::math;

/// Mel scale, `2595 * log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * math::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (math::pow10(mel / 2595.0) - 1.0)
}

/// ERB-rate scale, `21.4 * log10(1 + 0.00437 f)`.
pub fn hz_to_erb_rate(hz: f64) -> f64 {
    21.4 * math::log10(1.0 + 0.004_37 * hz)
}

pub fn erb_rate_to_hz(erb_rate: f64) -> f64 {
    (math::pow10(erb_rate / 21.4) - 1.0) / 0.004_37
}

/// Equivalent rectangular bandwidth in Hz, `24.7 * (4.37 f / 1000 + 1)`.
pub fn erb(hz: f64) -> f64 {
    24.7 * (4.37 * hz / 1000.0 + 1.0)
}

/// Gammatone bandwidth parameter `1.019 * ERB(fc)`.
pub fn gammatone_bandwidth(center_hz: f64) -> f64 {
    1.019 * erb(center_hz)
}

/// Squared magnitude of a 4th-order gammatone filter, peak 1 at `center_hz`.
pub fn gammatone_response(center_hz: f64, hz: f64) -> f64 {
    let x = (hz - center_hz) / gammatone_bandwidth(center_hz);
    math::powi(1.0 + x * x, -4)
}

/// Triangle rising from `left` to 1 at `center`, falling to 0 at `right`.
fn triangle(left: f64, center: f64, right: f64, hz: f64) -> f64 {
    if hz <= left || hz >= right {
        0.0
    } else if hz <= center {
        (hz - left) / (center - left)
    } else {
        (right - hz) / (right - center)
    }
}

/// Weights over FFT bins for each filter, plus the parameters they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    kind: FeatureKind,
    sample_rate: u32,
    fft_size: usize,
    /// Filter centers in Hz, strictly increasing.
    center_freqs: Vec<f64>,
    /// Mel banks: `num_filters + 2` band edges; gammatone banks: empty.
    edges: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

fn check_range(sample_rate: u32, fft_size: usize, num_filters: usize, f_min: f64, f_max: f64) -> Result<(), FeatureError> {
    if sample_rate == 0 {
        return Err(FeatureError::InvalidConfig("sample rate must be positive"));
    }
    if !fft_size.is_power_of_two() || fft_size < 2 {
        return Err(FeatureError::InvalidConfig("fft size must be a power of two >= 2"));
    }
    if num_filters == 0 {
        return Err(FeatureError::InvalidConfig("need at least one filter"));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(0.0 <= f_min && f_min < f_max && f_max <= nyquist) {
        return Err(FeatureError::InvalidConfig("need 0 <= f_min < f_max <= sample_rate / 2"));
    }
    Ok(())
}

/// `count` points equally spaced from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

impl FilterBank {
    /// Triangular filters with peaks equally spaced on the mel scale.
    pub fn mel(sample_rate: u32, fft_size: usize, num_filters: usize, f_min: f64, f_max: f64) -> Result<Self, FeatureError> {
        check_range(sample_rate, fft_size, num_filters, f_min, f_max)?;
        let mut edges: Vec<f64> = linspace(hz_to_mel(f_min), hz_to_mel(f_max), num_filters + 2)
            .into_iter()
            .map(mel_to_hz)
            .collect();
        // pin the outer edges so the scale round trip cannot move them
        edges[0] = f_min;
        edges[num_filters + 1] = f_max;
        let centers = edges[1..=num_filters].to_vec();
        let bins = bin_freqs(sample_rate, fft_size);
        let weights = (0..num_filters)
            .map(|i| {
                bins.iter()
                    .map(|&f| triangle(edges[i], edges[i + 1], edges[i + 2], f))
                    .collect()
            })
            .collect();
        Self::finish(FeatureKind::Mel, sample_rate, fft_size, centers, edges, weights)
    }

    /// 4th-order gammatone magnitude responses with centers equally spaced on
    /// the ERB-rate scale strictly inside `(f_min, f_max)`.
    pub fn gammatone(sample_rate: u32, fft_size: usize, num_filters: usize, f_min: f64, f_max: f64) -> Result<Self, FeatureError> {
        check_range(sample_rate, fft_size, num_filters, f_min, f_max)?;
        let points = linspace(hz_to_erb_rate(f_min), hz_to_erb_rate(f_max), num_filters + 2);
        let centers: Vec<f64> = points[1..=num_filters].iter().map(|&e| erb_rate_to_hz(e)).collect();
        let bins = bin_freqs(sample_rate, fft_size);
        let weights = centers
            .iter()
            .map(|&fc| bins.iter().map(|&f| gammatone_response(fc, f)).collect())
            .collect();
        Self::finish(FeatureKind::Gammatone, sample_rate, fft_size, centers, Vec::new(), weights)
    }

    pub fn build(kind: FeatureKind, sample_rate: u32, fft_size: usize, num_filters: usize, f_min: f64, f_max: f64) -> Result<Self, FeatureError> {
        match kind {
            FeatureKind::Mel => Self::mel(sample_rate, fft_size, num_filters, f_min, f_max),
            FeatureKind::Gammatone => Self::gammatone(sample_rate, fft_size, num_filters, f_min, f_max),
        }
    }

    fn finish(
        kind: FeatureKind,
        sample_rate: u32,
        fft_size: usize,
        center_freqs: Vec<f64>,
        edges: Vec<f64>,
        weights: Vec<Vec<f64>>,
    ) -> Result<Self, FeatureError> {
        let bin_of = |f: f64| math::round(f * fft_size as f64 / sample_rate as f64) as i64;
        for pair in center_freqs.windows(2) {
            if bin_of(pair[0]) == bin_of(pair[1]) {
                return Err(FeatureError::DegenerateBank { low_hz: pair[0], high_hz: pair[1] });
            }
        }
        if let Some(i) = weights.iter().position(|row: &Vec<f64>| !row.iter().any(|&w| w > 0.0)) {
            return Err(FeatureError::DegenerateBank {
                low_hz: center_freqs[i],
                high_hz: center_freqs[i],
            });
        }
        Ok(Self { kind, sample_rate, fft_size, center_freqs, edges, weights })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn num_filters(&self) -> usize {
        self.center_freqs.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    /// One row per filter, `fft_size / 2 + 1` columns.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Continuous response of filter `index` at `hz`, the function the bin
    /// weights are sampled from.
    pub fn response(&self, index: usize, hz: f64) -> f64 {
        match self.kind {
            FeatureKind::Mel => triangle(self.edges[index], self.edges[index + 1], self.edges[index + 2], hz),
            FeatureKind::Gammatone => gammatone_response(self.center_freqs[index], hz),
        }
    }

    /// Band energies: `weights * power_spectrum`.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

fn bin_freqs(sample_rate: u32, fft_size: usize) -> Vec<f64> {
    (0..=fft_size / 2)
        .map(|k| k as f64 * sample_rate as f64 / fft_size as f64)
        .collect()
}
