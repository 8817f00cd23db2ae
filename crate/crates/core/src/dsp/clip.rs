//! Clip construction: segmentation, linear resampling, z-scoring and the
//! clip-level quality gate.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::filter::BandpassDesign;
use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub band: BandpassDesign,
    pub clip_seconds: f64,
    pub target_fs: f64,
    /// Share of samples pinned at the extreme value that marks saturation.
    pub saturation_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            band: BandpassDesign::default(),
            clip_seconds: 10.0,
            target_fs: 500.0,
            saturation_fraction: 0.01,
        }
    }
}

impl PreprocessConfig {
    pub fn clip_len(&self) -> usize {
        (self.clip_seconds * self.target_fs).round() as usize
    }
}

/// A preprocessed clip: band-passed, resampled and z-scored.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub record_id: String,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityIssue {
    ZeroVariance,
    Saturated,
}

impl fmt::Display for QualityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QualityIssue::ZeroVariance => write!(f, "zero variance"),
            QualityIssue::Saturated => write!(f, "saturated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClipOutcome {
    Accepted(Clip),
    Rejected { index: usize, issue: QualityIssue },
}

impl ClipOutcome {
    pub fn clip(&self) -> Option<&Clip> {
        match self {
            ClipOutcome::Accepted(c) => Some(c),
            ClipOutcome::Rejected { .. } => None,
        }
    }
}

/// Non-overlapping clips of `clip_seconds`; the trailing remainder is dropped.
pub fn segment(samples: &[f64], fs: f64, clip_seconds: f64) -> Vec<Vec<f64>> {
    let len = (clip_seconds * fs).round() as usize;
    if len == 0 || samples.len() < len {
        log::warn!(
            "recording of {:.2} s is shorter than one {clip_seconds} s clip",
            samples.len() as f64 / fs
        );
        return Vec::new();
    }
    samples.chunks_exact(len).map(<[f64]>::to_vec).collect()
}

/// Linear interpolation onto a `fs_out` grid over the same time span.
///
/// Output instants past the last input sample extrapolate the final
/// segment, so affine inputs are reproduced exactly.
pub fn resample_linear(clip: &[f64], fs_in: f64, fs_out: f64) -> Vec<f64> {
    if fs_in == fs_out || clip.len() < 2 {
        return clip.to_vec();
    }
    let n_out = (clip.len() as f64 * fs_out / fs_in).round() as usize;
    let last = clip.len() - 2;
    (0..n_out)
        .map(|k| {
            let pos = k as f64 * fs_in / fs_out;
            let i = (pos.floor() as usize).min(last);
            let frac = pos - i as f64;
            clip[i] + frac * (clip[i + 1] - clip[i])
        })
        .collect()
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

pub const MIN_SD: f64 = 1e-8;

/// Zero mean, unit sample SD.
pub fn zscore(clip: &[f64]) -> Result<Vec<f64>, DspError> {
    if clip.len() < 2 {
        return Err(DspError::Quality(QualityIssue::ZeroVariance));
    }
    let (mean, sd) = mean_sd(clip);
    if !(sd > MIN_SD) {
        return Err(DspError::Quality(QualityIssue::ZeroVariance));
    }
    let centered: Vec<f64> = clip.iter().map(|v| v - mean).collect();
    // Second centering pass removes the rounding residue of the first.
    let m2 = centered.iter().sum::<f64>() / centered.len() as f64;
    Ok(centered.into_iter().map(|v| (v - m2) / sd).collect())
}

/// Rejects flat clips and clips with ≥ `saturation_fraction` of samples at
/// an identical extreme value.
pub fn quality_check(raw: &[f64], saturation_fraction: f64) -> Result<(), QualityIssue> {
    if raw.len() < 2 || !(mean_sd(raw).1 > MIN_SD) {
        return Err(QualityIssue::ZeroVariance);
    }
    let max = raw.iter().cloned().fold(f64::MIN, f64::max);
    let min = raw.iter().cloned().fold(f64::MAX, f64::min);
    let limit = saturation_fraction * raw.len() as f64;
    let at_max = raw.iter().filter(|&&v| v == max).count() as f64;
    let at_min = raw.iter().filter(|&&v| v == min).count() as f64;
    if at_max >= limit.max(2.0) || at_min >= limit.max(2.0) {
        return Err(QualityIssue::Saturated);
    }
    Ok(())
}

/// Full chain for one recording: band-pass at native rate, segment, gate
/// each raw clip, resample, z-score.
pub fn preprocess_recording(
    record_id: &str,
    samples: &[f64],
    fs: f64,
    cfg: &PreprocessConfig,
) -> Result<Vec<ClipOutcome>, DspError> {
    chain(record_id, samples, fs, cfg, true)
}

/// The same chain without the z-score: accepted clips stay in input units
/// (mV), which keeps amplitudes comparable across recordings.
pub fn bandpassed_clips(
    record_id: &str,
    samples: &[f64],
    fs: f64,
    cfg: &PreprocessConfig,
) -> Result<Vec<ClipOutcome>, DspError> {
    chain(record_id, samples, fs, cfg, false)
}

fn chain(
    record_id: &str,
    samples: &[f64],
    fs: f64,
    cfg: &PreprocessConfig,
    normalize: bool,
) -> Result<Vec<ClipOutcome>, DspError> {
    if !(fs >= 100.0) {
        return Err(DspError::Parameter(format!("fs must be >= 100 Hz, got {fs}")));
    }
    let raw_clips = segment(samples, fs, cfg.clip_seconds);
    if raw_clips.is_empty() {
        return Ok(Vec::new());
    }
    let filtered = cfg.band.apply(samples, fs)?;
    let filtered_clips = segment(&filtered, fs, cfg.clip_seconds);
    let mut out = Vec::with_capacity(raw_clips.len());
    for (index, (raw, filt)) in raw_clips.iter().zip(&filtered_clips).enumerate() {
        if let Err(issue) = quality_check(raw, cfg.saturation_fraction) {
            out.push(ClipOutcome::Rejected { index, issue });
            continue;
        }
        let resampled = resample_linear(filt, fs, cfg.target_fs);
        let normalized = if normalize { zscore(&resampled) } else { Ok(resampled) };
        match normalized {
            Ok(z) => out.push(ClipOutcome::Accepted(Clip {
                samples: z,
                fs: cfg.target_fs,
                record_id: record_id.to_string(),
                index,
            })),
            Err(DspError::Quality(issue)) => out.push(ClipOutcome::Rejected { index, issue }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Writes `(time_s, value)` rows for plotting.
pub fn write_series_csv(
    path: &std::path::Path,
    fs: f64,
    offset_s: f64,
    values: &[f64],
) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "time_s,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(f, "{},{}", offset_s + i as f64 / fs, v)?;
    }
    f.flush()
}
