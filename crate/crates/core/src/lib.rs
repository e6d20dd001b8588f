//! Signal processing, classification, command grammar and chess rules for a
//! voice-driven chess game.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std` (only `alloc` is required). File IO, corpora, the HTTP
//! service and the CLI live in the `chessvox` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod audio;
pub mod chess;
pub mod classifier;
pub mod features;
pub mod grammar;
mod math;
pub mod vocabulary;

pub use audio::{AudioClip, TakeValidation, ValidationReason};
pub use classifier::{
    ConfusionMatrix, KnnModel, LabeledDataset, MetricsReport, Point, Prediction,
};
pub use features::{ClipEmbedding, FeatureKind, FeatureMatrix, FilterBank, FrameConfig};
pub use grammar::{CommandEvent, ParserState};
pub use vocabulary::Vocabulary;
