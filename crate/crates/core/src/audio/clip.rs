use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClipError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} is outside [-1, 1] or not finite")]
    SampleOutOfRange { index: usize },
}

/// Mono PCM signal with samples normalized to `[-1.0, 1.0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    source_id: Option<String>,
}

impl AudioClip {
    /// Builds a clip, rejecting out-of-range or non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, ClipError> {
        if sample_rate == 0 {
            return Err(ClipError::ZeroSampleRate);
        }
        if let Some(index) = samples
            .iter()
            .position(|s| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(ClipError::SampleOutOfRange { index });
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: None,
        })
    }

    /// Builds a clip, clamping samples into `[-1, 1]` and mapping NaN to 0.
    pub fn from_samples_clamped(samples: Vec<f64>, sample_rate: u32) -> Result<Self, ClipError> {
        let samples = samples
            .into_iter()
            .map(|s| if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) })
            .collect();
        Self::new(samples, sample_rate)
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = Some(id.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_id(&self) -> Option<&str> {
        self.source_id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Returns a copy with every sample multiplied by `gain`, clamped to range.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| (s * gain).clamp(-1.0, 1.0))
                .collect(),
            sample_rate: self.sample_rate,
            source_id: self.source_id.clone(),
        }
    }

    /// Sub-clip over sample indices `start..end`.
    pub(crate) fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
            source_id: self.source_id.clone(),
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}
