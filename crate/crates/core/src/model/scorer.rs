//! Scorer interface: anything mapping a preprocessed clip to a probability.

use super::features::{extract_features, FeatureConfig, FeatureVector};
use super::weights::ModelWeights;
use super::ModelError;
use crate::dsp::{detect_r_peaks_with, Clip, PeakDetectorConfig};

pub trait ClipScorer: Send + Sync {
    fn name(&self) -> &str;
    /// Probability of hyperkalemia for one preprocessed clip.
    fn score_clip(&self, clip: &Clip) -> Result<f64, ModelError>;
}

/// Peak detection plus feature extraction on one clip.
pub fn featurize_clip(
    clip: &Clip,
    peaks: &PeakDetectorConfig,
    features: &FeatureConfig,
) -> Result<FeatureVector, ModelError> {
    let beats = detect_r_peaks_with(&clip.samples, clip.fs, peaks);
    extract_features(&clip.samples, &beats, features)
}

#[derive(Debug, Clone)]
pub struct LogisticClipScorer {
    pub weights: ModelWeights,
    pub peaks: PeakDetectorConfig,
    pub features: FeatureConfig,
}

impl LogisticClipScorer {
    pub fn new(weights: ModelWeights) -> Self {
        Self {
            weights,
            peaks: PeakDetectorConfig::default(),
            features: FeatureConfig::default(),
        }
    }
}

impl ClipScorer for LogisticClipScorer {
    fn name(&self) -> &str {
        "logistic-5"
    }

    fn score_clip(&self, clip: &Clip) -> Result<f64, ModelError> {
        let f = featurize_clip(clip, &self.peaks, &self.features)?;
        self.weights.predict_proba(&f)
    }
}

/// Recording-level risk: arithmetic mean of clip probabilities. Computed as
/// a running mean so that equal inputs come back exactly.
pub fn aggregate_clip_scores(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut m = 0.0;
    for (k, &s) in scores.iter().enumerate() {
        m += (s - m) / (k + 1) as f64;
    }
    Some(m)
}
