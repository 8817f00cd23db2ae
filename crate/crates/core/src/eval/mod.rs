//! Discrimination and threshold metrics, patient-clustered bootstrap CIs,
//! and the reference-negative phenotype comparison.

pub mod bootstrap;
pub mod metrics;
pub mod reference;
pub mod report;

use thiserror::Error;

pub use bootstrap::{clustered_bootstrap, percentile, BootstrapConfig, Interval};
pub use metrics::{auroc, confusion_metrics, roc_points, Confusion, ConfusionMetrics, RocPoint};
pub use reference::{compare_reference_negative, two_proportion_z_test, ReferenceNegativeRow, ReferenceNegativeTable};
pub use report::{evaluate_endpoint, Endpoint, EvalReport, MetricRow, ScoredPair};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{0} is undefined: both classes must be present")]
    Undefined(String),
    #[error("{metric} undefined in {skipped} of {total} bootstrap resamples")]
    MostlyUndefined {
        metric: String,
        skipped: usize,
        total: usize,
    },
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("invalid input: {0}")]
    Input(String),
}
