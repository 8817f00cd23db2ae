//! Rule-based comorbidity phenotyping from free-text diagnoses.
//!
//! Text and keywords are normalized (lowercase, non-alphanumerics to
//! spaces, whitespace collapsed) and matched as whole-word substrings.
//! Only diagnoses dated on or before the index ECG count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::{Diagnosis, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordConfig {
    pub ckd: Vec<String>,
    pub heart_failure: Vec<String>,
    pub hypertension: Vec<String>,
    pub diabetes: Vec<String>,
    pub coronary_artery_disease: Vec<String>,
    pub stroke: Vec<String>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for KeywordConfig {
    fn default() -> Self {
        Self {
            // Non-specific "renal insufficiency" is deliberately absent: it
            // only counts when qualified as chronic.
            ckd: strings(&[
                "chronic kidney disease",
                "chronic kidney failure",
                "chronic renal insufficiency",
                "chronic renal failure",
                "chronic renal disease",
                "end stage kidney disease",
                "end stage renal disease",
                "esrd",
                "eskd",
                "uraemia",
                "uremia",
                "ckd",
            ]),
            heart_failure: strings(&[
                "heart failure",
                "cardiac failure",
                "hfpef",
                "hfref",
                "hfmref",
            ]),
            hypertension: strings(&["hypertension", "hypertensive"]),
            diabetes: strings(&["diabetes"]),
            coronary_artery_disease: strings(&[
                "coronary artery disease",
                "coronary heart disease",
                "ischemic heart disease",
                "ischaemic heart disease",
            ]),
            stroke: strings(&["stroke", "cerebral infarction", "cerebrovascular accident"]),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComorbidityProfile {
    pub patient_id: String,
    pub ckd: bool,
    pub heart_failure: bool,
    pub hypertension: bool,
    pub diabetes: bool,
    pub coronary_artery_disease: bool,
    pub stroke: bool,
}

impl ComorbidityProfile {
    pub const FLAGS: [&'static str; 6] = [
        "ckd",
        "heart_failure",
        "hypertension",
        "diabetes",
        "coronary_artery_disease",
        "stroke",
    ];

    pub fn flag(&self, name: &str) -> Option<bool> {
        Some(match name {
            "ckd" => self.ckd,
            "heart_failure" => self.heart_failure,
            "hypertension" => self.hypertension,
            "diabetes" => self.diabetes,
            "coronary_artery_disease" => self.coronary_artery_disease,
            "stroke" => self.stroke,
            _ => return None,
        })
    }
}

pub fn normalize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn matches_any(padded_text: &str, keywords: &[String]) -> bool {
    keywords.iter().any(|k| {
        let k = normalize(k);
        !k.is_empty() && padded_text.contains(&format!(" {k} "))
    })
}

/// Flags for one patient from diagnoses on or before `index`.
pub fn phenotype_patient<'a>(
    patient_id: &str,
    diagnoses: impl IntoIterator<Item = &'a Diagnosis>,
    index: Timestamp,
    keywords: &KeywordConfig,
) -> ComorbidityProfile {
    let mut p = ComorbidityProfile {
        patient_id: patient_id.to_string(),
        ..Default::default()
    };
    for d in diagnoses {
        if d.patient_id != patient_id || d.timestamp > index {
            continue;
        }
        let text = format!(" {} ", normalize(&d.text));
        p.ckd |= matches_any(&text, &keywords.ckd);
        p.heart_failure |= matches_any(&text, &keywords.heart_failure);
        p.hypertension |= matches_any(&text, &keywords.hypertension);
        p.diabetes |= matches_any(&text, &keywords.diabetes);
        p.coronary_artery_disease |= matches_any(&text, &keywords.coronary_artery_disease);
        p.stroke |= matches_any(&text, &keywords.stroke);
    }
    p
}

/// Profiles for every patient in `index`; patients without diagnoses get all-false flags.
pub fn phenotype(
    diagnoses: &[Diagnosis],
    index: &BTreeMap<String, Timestamp>,
    keywords: &KeywordConfig,
) -> BTreeMap<String, ComorbidityProfile> {
    let mut by_patient: BTreeMap<&str, Vec<&Diagnosis>> = BTreeMap::new();
    for d in diagnoses {
        by_patient.entry(d.patient_id.as_str()).or_default().push(d);
    }
    index
        .iter()
        .map(|(pid, ts)| {
            let ds = by_patient.get(pid.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            (pid.clone(), phenotype_patient(pid, ds.iter().copied(), *ts, keywords))
        })
        .collect()
}
