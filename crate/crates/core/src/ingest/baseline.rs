//! Baseline-characteristics summary per partition: mean (SD) for continuous
//! variables, n (%) for flags.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::pairing::EcgPotassiumPair;
use super::phenotype::ComorbidityProfile;
use super::records::DemographicsRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub partition: String,
    pub variable: String,
    pub kind: String,
    /// Denominator: patients for patient-level rows, pairs for pair-level rows.
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub count: Option<usize>,
    pub percent: Option<f64>,
    pub degenerate: bool,
}

/// Mean and sample SD (n − 1). A single value yields SD 0 and `degenerate`.
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64, bool)> {
    match xs.len() {
        0 => None,
        1 => Some((xs[0], 0.0, true)),
        n => {
            let mean = xs.iter().sum::<f64>() / n as f64;
            let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            Some((mean, (ss / (n - 1) as f64).sqrt(), false))
        }
    }
}

fn continuous(partition: &str, variable: &str, xs: &[f64]) -> Option<BaselineRow> {
    let (mean, sd, degenerate) = mean_sd(xs)?;
    Some(BaselineRow {
        partition: partition.into(),
        variable: variable.into(),
        kind: "continuous".into(),
        n: xs.len(),
        mean: Some(mean),
        sd: Some(sd),
        count: None,
        percent: None,
        degenerate,
    })
}

fn categorical(partition: &str, variable: &str, flags: &[bool]) -> Option<BaselineRow> {
    if flags.is_empty() {
        return None;
    }
    let count = flags.iter().filter(|f| **f).count();
    Some(BaselineRow {
        partition: partition.into(),
        variable: variable.into(),
        kind: "categorical".into(),
        n: flags.len(),
        mean: None,
        sd: None,
        count: Some(count),
        percent: Some(100.0 * count as f64 / flags.len() as f64),
        degenerate: flags.len() == 1,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineTable {
    pub rows: Vec<BaselineRow>,
    pub warnings: Vec<String>,
}

/// Summaries for each named partition. Empty partitions are omitted with a warning.
pub fn baseline_table(
    partitions: &[(String, Vec<&EcgPotassiumPair>)],
    demographics: &BTreeMap<String, DemographicsRow>,
    comorbidities: &BTreeMap<String, ComorbidityProfile>,
) -> BaselineTable {
    let mut out = BaselineTable::default();
    for (name, pairs) in partitions {
        if pairs.is_empty() {
            log::warn!("baseline table: partition {name} is empty, omitted");
            out.warnings.push(format!("partition {name} is empty; omitted"));
            continue;
        }
        let patients: BTreeSet<&str> = pairs.iter().map(|p| p.patient_id.as_str()).collect();
        let ages: Vec<f64> = patients
            .iter()
            .filter_map(|p| demographics.get(*p).map(|d| d.age_years))
            .collect();
        let female: Vec<bool> = patients
            .iter()
            .filter_map(|p| demographics.get(*p).map(|d| d.sex.eq_ignore_ascii_case("F")))
            .collect();
        let k: Vec<f64> = pairs.iter().map(|p| p.potassium).collect();
        let dt: Vec<f64> = pairs.iter().map(|p| p.delta_minutes).collect();
        let hk: Vec<bool> = pairs.iter().map(|p| p.label_primary).collect();
        let severe: Vec<bool> = pairs.iter().map(|p| p.label_severe).collect();
        let flag = |f: &str| -> Vec<bool> {
            patients
                .iter()
                .filter_map(|p| comorbidities.get(*p).and_then(|c| c.flag(f)))
                .collect()
        };
        let rows = [
            continuous(name, "age_years", &ages),
            categorical(name, "female", &female),
            continuous(name, "potassium_mmol_l", &k),
            continuous(name, "ecg_lab_interval_min", &dt),
            categorical(name, "hyperkalemia_k_gt_5_5", &hk),
            categorical(name, "severe_k_ge_6_0", &severe),
            categorical(name, "ckd", &flag("ckd")),
            categorical(name, "heart_failure", &flag("heart_failure")),
            categorical(name, "hypertension", &flag("hypertension")),
            categorical(name, "diabetes", &flag("diabetes")),
        ];
        out.rows.extend(rows.into_iter().flatten());
        out.rows.push(BaselineRow {
            partition: name.clone(),
            variable: "patients".into(),
            kind: "count".into(),
            n: patients.len(),
            mean: None,
            sd: None,
            count: Some(patients.len()),
            percent: None,
            degenerate: patients.len() == 1,
        });
    }
    out
}
