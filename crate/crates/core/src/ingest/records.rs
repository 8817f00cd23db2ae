//! Cohort file rows (as stored on disk) and their parsed forms.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub type Timestamp = DateTime<Utc>;

pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// One line of `manifest.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub record_id: String,
    pub patient_id: String,
    pub timestamp: String,
    pub fs_hz: u32,
    pub n_samples: u32,
    pub file_path: String,
    pub true_k: Option<f64>,
}

/// One line of `labs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabRow {
    pub lab_id: String,
    pub patient_id: String,
    pub timestamp: String,
    pub potassium_mmol_l: f64,
    pub hemolysed: u8,
}

/// One line of `diagnoses.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisRow {
    pub patient_id: String,
    pub timestamp: String,
    pub diagnosis_text: String,
}

/// One line of `demographics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicsRow {
    pub patient_id: String,
    pub age_years: f64,
    pub sex: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub record_id: String,
    pub patient_id: String,
    pub timestamp: Timestamp,
    pub fs_hz: u32,
    pub n_samples: u32,
    pub file_path: String,
    pub true_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabResult {
    pub lab_id: String,
    pub patient_id: String,
    pub timestamp: Timestamp,
    pub potassium: f64,
    pub hemolysed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub patient_id: String,
    pub timestamp: Timestamp,
    pub text: String,
}

/// Rows rejected while parsing, by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTally {
    pub bad_timestamp: usize,
    pub bad_value: usize,
}

impl ParseTally {
    pub fn total(&self) -> usize {
        self.bad_timestamp + self.bad_value
    }
}

pub fn parse_recordings(rows: &[ManifestRow]) -> (Vec<Recording>, ParseTally) {
    let mut tally = ParseTally::default();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let Some(timestamp) = parse_timestamp(&r.timestamp) else {
            tally.bad_timestamp += 1;
            continue;
        };
        if r.fs_hz == 0 {
            tally.bad_value += 1;
            continue;
        }
        out.push(Recording {
            record_id: r.record_id.clone(),
            patient_id: r.patient_id.clone(),
            timestamp,
            fs_hz: r.fs_hz,
            n_samples: r.n_samples,
            file_path: r.file_path.clone(),
            true_k: r.true_k,
        });
    }
    (out, tally)
}

pub fn parse_labs(rows: &[LabRow]) -> (Vec<LabResult>, ParseTally) {
    let mut tally = ParseTally::default();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let Some(timestamp) = parse_timestamp(&r.timestamp) else {
            tally.bad_timestamp += 1;
            continue;
        };
        if !(r.potassium_mmol_l.is_finite() && r.potassium_mmol_l > 0.0) || r.hemolysed > 1 {
            tally.bad_value += 1;
            continue;
        }
        out.push(LabResult {
            lab_id: r.lab_id.clone(),
            patient_id: r.patient_id.clone(),
            timestamp,
            potassium: r.potassium_mmol_l,
            hemolysed: r.hemolysed == 1,
        });
    }
    (out, tally)
}

pub fn parse_diagnoses(rows: &[DiagnosisRow]) -> (Vec<Diagnosis>, ParseTally) {
    let mut tally = ParseTally::default();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        match parse_timestamp(&r.timestamp) {
            Some(timestamp) => out.push(Diagnosis {
                patient_id: r.patient_id.clone(),
                timestamp,
                text: r.diagnosis_text.clone(),
            }),
            None => tally.bad_timestamp += 1,
        }
    }
    (out, tally)
}
