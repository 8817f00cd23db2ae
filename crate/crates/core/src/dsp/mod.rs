//! Preprocessing chain (band-pass → 10-s clips → 500 Hz → z-score) and the
//! beat utilities used by feature extraction and signal averaging.

pub mod average;
pub mod clip;
pub mod filter;
pub mod peaks;

use thiserror::Error;

pub use average::{extract_beats, max_abs_difference, signal_average, AveragedWaveform};
pub use clip::{
    bandpassed_clips, preprocess_recording, quality_check, resample_linear, segment, zscore, Clip, ClipOutcome,
    PreprocessConfig, QualityIssue,
};
pub use filter::{bandpass, BandpassDesign, SosFilter};
pub use peaks::{detect_r_peaks, detect_r_peaks_with, BeatSet, PeakDetectorConfig};

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("signal too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error("clip rejected for quality: {0}")]
    Quality(QualityIssue),
    #[error("empty beat group {0:?}")]
    EmptyGroup(String),
}
