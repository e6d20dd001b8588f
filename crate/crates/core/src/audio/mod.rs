//! Canonical clips and the pre-processing stage: WAV decoding, resampling,
//! silence trimming and take validation.

mod clip;
mod process;
pub mod wav;

pub use clip::{AudioClip, ClipError};
pub use process::{
    resample, rms, rms_dbfs, trim_silence, validate_take, validate_take_with, TakeValidation,
    ValidationLimits, ValidationReason, DEFAULT_PAD_MS, DEFAULT_THRESHOLD_DBFS,
};
pub use wav::{decode_wav, encode_wav, WavError};

/// Sample rate every clip is brought to before feature extraction.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;
