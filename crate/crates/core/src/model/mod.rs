//! Per-clip morphology features and a compact logistic classifier trained
//! with binary cross-entropy and Adam, behind a pluggable scorer trait.

pub mod features;
pub mod optim;
pub mod scorer;
pub mod threshold;
pub mod train;
pub mod weights;

use thiserror::Error;

pub use features::{extract_features, FeatureConfig, FeatureVector, FEATURE_NAMES};
pub use optim::{adam_step, bce_loss_and_gradient, AdamConfig, AdamState};
pub use scorer::{aggregate_clip_scores, featurize_clip, ClipScorer, LogisticClipScorer};
pub use threshold::{freeze_threshold, ThresholdInfo, ThresholdPolicy};
pub use train::{train, EpochRecord, LabeledSet, TrainConfig, TrainProfile};
pub use weights::{ModelWeights, Standardizer, TrainingMetadata};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("feature extraction failed: {0}")]
    Features(String),
    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },
    #[error("non-finite feature {name}")]
    NonFiniteFeature { name: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0} needs both classes present")]
    SingleClass(&'static str),
    #[error("empty {0} set")]
    Empty(&'static str),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("weights file: {0}")]
    Io(String),
}
