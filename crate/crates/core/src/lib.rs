//! Single-lead ECG hyperkalemia screening.
//!
//! The crate covers the whole study pipeline: a synthetic lead-I cohort
//! generator, ECG-to-potassium pairing and leakage-safe partitioning,
//! signal preprocessing, a compact feature-based classifier trained with
//! Adam on binary cross-entropy, patient-clustered bootstrap evaluation,
//! longitudinal tracking, and the handheld 30-s clip aggregation path.
//!
//! Data-parallel loops (cohort synthesis, clip featurization, bootstrap
//! resamples) go through [`par`]; with the `parallel` feature disabled they
//! run sequentially and produce identical results.

// `!(x >= lo)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod device;
pub mod dsp;
pub mod eval;
pub mod ingest;
pub mod longitudinal;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod provenance;
pub mod synthdata;
pub mod wire;

/// Crate version embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
