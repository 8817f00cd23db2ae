//! Cohort ingestion: ECG-anchored pairing, comorbidity phenotyping,
//! leakage-safe partitioning, STARD-style accounting and baseline
//! characteristics summaries.

pub mod baseline;
pub mod dataset;
pub mod pairing;
pub mod phenotype;
pub mod records;
pub mod split;
pub mod stard;

use thiserror::Error;

pub use pairing::{pair_ecg_to_lab, EcgPotassiumPair, PairRow, PairingOutcome, PairingTally};
pub use phenotype::{phenotype, ComorbidityProfile, KeywordConfig};
pub use records::{Diagnosis, LabResult, Recording, Timestamp};
pub use split::{chronological_split, patient_split, patient_split_811, Partition, SplitAssignment};
pub use stard::{SiteStard, StardReport};

/// Primary endpoint: K > 5.5 mmol/L.
pub const PRIMARY_THRESHOLD: f64 = 5.5;
/// Moderate-to-severe endpoint: K >= 6.0 mmol/L.
pub const SEVERE_THRESHOLD: f64 = 6.0;

pub fn label_primary(k: f64) -> bool {
    k > PRIMARY_THRESHOLD
}

pub fn label_severe(k: f64) -> bool {
    k >= SEVERE_THRESHOLD
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("patient split needs at least {min} patients, got {got}")]
    TooFewPatients { min: usize, got: usize },
    #[error("invalid split ratios {0:?}")]
    BadRatios((u32, u32, u32)),
    #[error("missing input file {path}")]
    MissingFile { path: String },
    #[error("CSV error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("bad row: {0}")]
    BadRow(String),
}
