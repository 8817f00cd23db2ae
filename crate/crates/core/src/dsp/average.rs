//! R-aligned beat extraction and group signal averaging.

use serde::{Deserialize, Serialize};

use super::peaks::BeatSet;
use super::DspError;

/// Windows `[r - pre, r + post)` for every complete beat.
pub fn extract_beats(clip: &[f64], beats: &BeatSet) -> Vec<Vec<f64>> {
    beats
        .complete()
        .map(|r| clip[r - beats.pre..r + beats.post].to_vec())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedWaveform {
    pub group: String,
    pub n_beats: usize,
    pub mean: Vec<f64>,
    /// Pointwise sample SD (0 for a single beat).
    pub sd: Vec<f64>,
}

/// Pointwise mean and SD per group. All beats must share one length.
pub fn signal_average(groups: &[(String, Vec<Vec<f64>>)]) -> Result<Vec<AveragedWaveform>, DspError> {
    groups
        .iter()
        .map(|(name, beats)| {
            let Some(first) = beats.first() else {
                return Err(DspError::EmptyGroup(name.clone()));
            };
            let len = first.len();
            if beats.iter().any(|b| b.len() != len) {
                return Err(DspError::Parameter(format!(
                    "group {name:?}: beats differ in length"
                )));
            }
            let n = beats.len() as f64;
            let mean: Vec<f64> = (0..len)
                .map(|i| beats.iter().map(|b| b[i]).sum::<f64>() / n)
                .collect();
            let sd = (0..len)
                .map(|i| {
                    if beats.len() < 2 {
                        0.0
                    } else {
                        let ss: f64 = beats.iter().map(|b| (b[i] - mean[i]).powi(2)).sum();
                        (ss / (n - 1.0)).sqrt()
                    }
                })
                .collect();
            Ok(AveragedWaveform {
                group: name.clone(),
                n_beats: beats.len(),
                mean,
                sd,
            })
        })
        .collect()
}

/// Index of the largest absolute difference between two mean waveforms.
pub fn max_abs_difference(a: &AveragedWaveform, b: &AveragedWaveform) -> Option<usize> {
    a.mean
        .iter()
        .zip(&b.mean)
        .map(|(x, y)| (x - y).abs())
        .enumerate()
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .map(|(i, _)| i)
}
