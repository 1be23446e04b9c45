//! Self-supervised modulation classification on raw IQ time series.
//!
//! This crate implements the full pipeline:
//!
//! - [`siggen`] — deterministic synthesis of labeled baseband IQ frames
//!   (Gray-coded constellations, RRC pulse shaping, CFO/phase impairments,
//!   FIR fading, calibrated AWGN) and a compact on-disk dataset format.
//! - [`nn`] — a minimal numerical substrate: the layer forward/backward
//!   rules a transformer needs (linear, layer norm, multi-head attention,
//!   GELU MLP), plus AdamW and a canonical parameter export format.
//! - [`model`] — the masked autoencoder: patchify → embed → random mask →
//!   encode → restore with mask tokens → decode → predict masked patches,
//!   and the class-token classifier path used after pretraining.
//! - [`train`] — masked-reconstruction pretraining on SNR-filtered
//!   unlabeled frames and supervised fine-tuning on a small labeled
//!   fraction, with warmup+cosine scheduling and deterministic batching.
//! - [`eval`] — overall accuracy, Cohen's kappa, confusion matrices and
//!   per-SNR accuracy curves, emitted as JSON + CSV reports.
//! - [`cli`] — config-driven commands (`gen`, `pretrain`, `finetune`,
//!   `eval`, `ablate`) used by the `iqmae` binary.
//!
//! Start with the runnable examples (`cargo run --release --example ...`):
//! each major capability has one.

pub mod cli;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod siggen;
pub mod train;

pub use error::{Error, Result};
