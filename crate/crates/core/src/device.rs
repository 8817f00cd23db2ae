//! Handheld path: a PKECG1 recording in, a measurement-level risk out.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{preprocess_recording, ClipOutcome, PreprocessConfig};
use crate::model::{aggregate_clip_scores, ClipScorer, LogisticClipScorer, ModelWeights};
use crate::wire::{self, Waveform, WireError};

pub type DeviceRecording = Waveform;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("cannot parse recording: {0}")]
    Parse(#[from] WireError),
    #[error("recording too short: {duration_s:.2} s, need at least {min_s} s")]
    TooShort { duration_s: f64, min_s: f64 },
    #[error("no clip passed quality checks: {}", notices.join("; "))]
    Quality { notices: Vec<String> },
    #[error("preprocessing failed: {0}")]
    Preprocess(String),
}

impl DeviceError {
    /// 2 for signal problems the user can fix by re-recording, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            DeviceError::TooShort { .. } | DeviceError::Quality { .. } => 2,
            DeviceError::Parse(_) | DeviceError::Preprocess(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceResult {
    pub n_clips: usize,
    /// One entry per clip; `None` where the clip was rejected.
    pub clip_probs: Vec<Option<f64>>,
    pub risk: f64,
    pub threshold: f64,
    pub alert: bool,
    pub latency_ms: f64,
    pub notices: Vec<String>,
}

pub fn parse_recording(bytes: &[u8]) -> Result<DeviceRecording, DeviceError> {
    Ok(wire::decode(bytes)?)
}

pub fn read_recording(path: &Path) -> Result<DeviceRecording, DeviceError> {
    Ok(wire::read_file(path)?)
}

/// Scores ⌊duration / clip length⌋ clips and averages the accepted ones.
pub fn run_handheld_with(
    rec: &DeviceRecording,
    scorer: &dyn ClipScorer,
    tau: f64,
    pre: &PreprocessConfig,
) -> Result<DeviceResult, DeviceError> {
    let start = Instant::now();
    let duration_s = rec.duration_s();
    if duration_s < pre.clip_seconds {
        return Err(DeviceError::TooShort {
            duration_s,
            min_s: pre.clip_seconds,
        });
    }
    let outcomes = preprocess_recording("device", &rec.to_f64(), rec.fs_hz as f64, pre)
        .map_err(|e| DeviceError::Preprocess(e.to_string()))?;
    let mut notices = Vec::new();
    let mut clip_probs = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        match o {
            ClipOutcome::Accepted(c) => match scorer.score_clip(c) {
                Ok(p) => clip_probs.push(Some(p)),
                Err(e) => {
                    notices.push(format!("clip {}: not scored ({e})", c.index + 1));
                    clip_probs.push(None);
                }
            },
            ClipOutcome::Rejected { index, issue } => {
                notices.push(format!("clip {}: rejected ({issue})", index + 1));
                clip_probs.push(None);
            }
        }
    }
    let probs: Vec<f64> = clip_probs.iter().flatten().copied().collect();
    let risk = aggregate_clip_scores(&probs).ok_or(DeviceError::Quality {
        notices: notices.clone(),
    })?;
    let trailing = duration_s - outcomes.len() as f64 * pre.clip_seconds;
    if trailing > 1e-9 {
        notices.push(format!("last {trailing:.2} s not used (shorter than one clip)"));
    }
    Ok(DeviceResult {
        n_clips: outcomes.len(),
        clip_probs,
        risk,
        threshold: tau,
        alert: risk >= tau,
        latency_ms: start.elapsed().as_secs_f64() * 1000.0,
        notices,
    })
}

pub fn run_handheld(rec: &DeviceRecording, weights: &ModelWeights) -> Result<DeviceResult, DeviceError> {
    let scorer = LogisticClipScorer::new(weights.clone());
    run_handheld_with(rec, &scorer, weights.frozen_threshold, &PreprocessConfig::default())
}
