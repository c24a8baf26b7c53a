//! Quick-SpoofNet: one-shot audio anti-spoofing.
//!
//! The crate implements the full pipeline for detecting spoofed speech from
//! a single enrolled example per class:
//!
//! - [`audio`] — WAV ingestion and the five-step preprocessing chain;
//! - [`features`] — STFT, log-mel, spectral contrast, and spectral envelope
//!   fused into a 48×501 feature map;
//! - [`nn`] — hand-rolled differentiable kernels (LSTM, dense, batch norm,
//!   dropout), triplet loss, and Adam with step decay;
//! - [`model`] — the shared-weight recurrent embedder and its checkpoint
//!   format;
//! - [`protocol`] — speaker-disjoint episode splits, triplet sampling, and
//!   one-shot query classification;
//! - [`metrics`] — EER, DET curves, and classification metrics;
//! - [`corpus`] — dataset manifests, protocol-file parsing, and a
//!   deterministic synthetic toy corpus;
//! - [`trainer`] — the training loop;
//! - [`config`] — the unified run configuration.

pub mod audio;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod protocol;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
