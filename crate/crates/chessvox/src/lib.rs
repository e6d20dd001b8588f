//! Filesystem, evaluation and network layer on top of `chessvox-core`.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod fixture;
pub mod http;
pub mod profiles;
pub mod service;
pub mod session;

pub use chessvox_core as core;
