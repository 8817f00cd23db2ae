//! Morphological features measured per beat and aggregated by median.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dsp::BeatSet;

pub const FEATURE_NAMES: [&str; 5] = [
    "t_r_ratio",
    "qrs_duration_ms",
    "t_width_ms",
    "t_symmetry",
    "heart_rate_bpm",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// T amplitude over R amplitude, both above the PR baseline.
    pub t_r_ratio: f64,
    pub qrs_duration_ms: f64,
    /// T width at half its amplitude.
    pub t_width_ms: f64,
    /// Upslope over downslope duration of the T wave at half amplitude.
    pub t_symmetry: f64,
    pub heart_rate_bpm: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.t_r_ratio,
            self.qrs_duration_ms,
            self.t_width_ms,
            self.t_symmetry,
            self.heart_rate_bpm,
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in FEATURE_NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteFeature {
                    name: name.to_string(),
                });
            }
        }
        if !(self.qrs_duration_ms > 0.0) {
            return Err(ModelError::Features("QRS duration not positive".into()));
        }
        if !(self.heart_rate_bpm > 20.0 && self.heart_rate_bpm < 250.0) {
            return Err(ModelError::Features(format!(
                "heart rate {:.1} bpm outside (20, 250)",
                self.heart_rate_bpm
            )));
        }
        Ok(())
    }
}

/// Measurement windows relative to R, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub baseline_from_s: f64,
    pub baseline_to_s: f64,
    pub t_from_s: f64,
    pub t_to_s: f64,
    pub qrs_search_s: f64,
    /// QRS boundary: first/last sample within the search range deviating
    /// from baseline by at least this fraction of the R amplitude.
    pub qrs_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            baseline_from_s: -0.11,
            baseline_to_s: -0.07,
            t_from_s: 0.15,
            t_to_s: 0.45,
            qrs_search_s: 0.12,
            qrs_threshold: 0.05,
        }
    }
}

struct BeatMeasure {
    t_r_ratio: f64,
    qrs_ms: f64,
    t_shape: Option<(f64, f64)>,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[m] } else { 0.5 * (xs[m - 1] + xs[m]) })
}

fn measure_beat(x: &[f64], r: usize, fs: f64, cfg: &FeatureConfig) -> Option<BeatMeasure> {
    let at = |s: f64| -> Option<usize> {
        let i = r as isize + (s * fs).round() as isize;
        (i >= 0 && (i as usize) < x.len()).then_some(i as usize)
    };
    let (b0, b1) = (at(cfg.baseline_from_s)?, at(cfg.baseline_to_s)?);
    let baseline = x[b0..=b1].iter().sum::<f64>() / (b1 - b0 + 1) as f64;
    let r_amp = x[r] - baseline;
    if !(r_amp > 0.0) {
        return None;
    }

    let (t0, t1) = (at(cfg.t_from_s)?, at(cfg.t_to_s)?);
    let tp = (t0..=t1).max_by(|&a, &b| x[a].total_cmp(&x[b]))?;
    let t_amp = x[tp] - baseline;

    let thr = cfg.qrs_threshold * r_amp;
    let span = (cfg.qrs_search_s * fs).round() as usize;
    let q_lo = r.saturating_sub(span);
    let q_hi = (r + span).min(x.len() - 1);
    let onset = (q_lo..=r).find(|&i| (x[i] - baseline).abs() >= thr)?;
    let offset = (r..=q_hi).rev().find(|&i| (x[i] - baseline).abs() >= thr)?;
    let qrs_ms = (offset - onset + 1) as f64 / fs * 1000.0;

    let t_shape = (t_amp > 0.0).then(|| {
        let half = baseline + 0.5 * t_amp;
        let mut left = tp;
        while left > t0 && x[left - 1] >= half {
            left -= 1;
        }
        let mut right = tp;
        while right < t1 && x[right + 1] >= half {
            right += 1;
        }
        let width_ms = (right - left + 1) as f64 / fs * 1000.0;
        let up = (tp - left + 1) as f64;
        let down = (right - tp + 1) as f64;
        (width_ms, up / down)
    });

    Some(BeatMeasure {
        t_r_ratio: t_amp / r_amp,
        qrs_ms,
        t_shape,
    })
}

/// Median per-beat features over the complete beats of a preprocessed clip.
pub fn extract_features(
    clip: &[f64],
    beats: &BeatSet,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, ModelError> {
    if beats.is_empty() {
        return Err(ModelError::Features("no beats detected".into()));
    }
    let rr = beats
        .median_rr_s()
        .ok_or_else(|| ModelError::Features("fewer than two beats".into()))?;
    let measures: Vec<BeatMeasure> = beats
        .complete()
        .filter_map(|r| measure_beat(clip, r, beats.fs, cfg))
        .collect();
    if measures.is_empty() {
        return Err(ModelError::Features("no measurable beats".into()));
    }
    let shapes: Vec<(f64, f64)> = measures.iter().filter_map(|m| m.t_shape).collect();
    let fv = FeatureVector {
        t_r_ratio: median(measures.iter().map(|m| m.t_r_ratio).collect()).unwrap(),
        qrs_duration_ms: median(measures.iter().map(|m| m.qrs_ms).collect()).unwrap(),
        t_width_ms: median(shapes.iter().map(|s| s.0).collect()).unwrap_or(0.0),
        t_symmetry: median(shapes.iter().map(|s| s.1).collect()).unwrap_or(1.0),
        heart_rate_bpm: 60.0 / rr,
    };
    fv.validate()?;
    Ok(fv)
}
