//! Endpoint evaluation at the frozen threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::{clustered_bootstrap_each, BootstrapConfig, Interval};
use super::metrics::{auroc, confusion_metrics};
use super::EvalError;
use crate::ingest::{label_primary, label_severe};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub record_id: String,
    pub patient_id: String,
    pub score: f64,
    pub potassium: f64,
    pub label_primary: bool,
    pub label_severe: bool,
}

impl ScoredPair {
    pub fn new(record_id: &str, patient_id: &str, score: f64, potassium: f64) -> Self {
        Self {
            record_id: record_id.to_string(),
            patient_id: patient_id.to_string(),
            score,
            potassium,
            label_primary: label_primary(potassium),
            label_severe: label_severe(potassium),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// K > 5.5 mmol/L.
    Primary,
    /// K ≥ 6.0 mmol/L.
    Severe,
}

impl Endpoint {
    pub const ALL: [Endpoint; 2] = [Endpoint::Primary, Endpoint::Severe];

    pub fn label(self, p: &ScoredPair) -> bool {
        match self {
            Endpoint::Primary => p.label_primary,
            Endpoint::Severe => p.label_severe,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::Primary => "primary",
            Endpoint::Severe => "severe",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "primary" => Some(Endpoint::Primary),
            "severe" => Some(Endpoint::Severe),
            _ => None,
        }
    }
}

/// A point estimate with its CI, or the reason it is not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    #[serde(flatten)]
    pub interval: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub not_applicable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub set: String,
    pub endpoint: Endpoint,
    pub n_pairs: usize,
    pub n_patients: usize,
    pub n_positive: usize,
    pub prevalence: f64,
    pub tau: f64,
    pub auroc: Interval,
    pub sensitivity: MetricEstimate,
    pub specificity: MetricEstimate,
    pub ppv: MetricEstimate,
    pub npv: MetricEstimate,
    pub accuracy: MetricEstimate,
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub set: String,
    pub endpoint: String,
    pub metric: String,
    pub point: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub valid_resamples: Option<usize>,
    pub skipped_resamples: Option<usize>,
}

impl EvalReport {
    pub fn metrics(&self) -> Vec<(&'static str, Option<&Interval>)> {
        vec![
            ("auroc", Some(&self.auroc)),
            ("sensitivity", self.sensitivity.interval.as_ref()),
            ("specificity", self.specificity.interval.as_ref()),
            ("ppv", self.ppv.interval.as_ref()),
            ("npv", self.npv.interval.as_ref()),
            ("accuracy", self.accuracy.interval.as_ref()),
        ]
    }

    pub fn metric_rows(&self) -> Vec<MetricRow> {
        self.metrics()
            .into_iter()
            .map(|(name, iv)| MetricRow {
                set: self.set.clone(),
                endpoint: self.endpoint.as_str().to_string(),
                metric: name.to_string(),
                point: iv.map(|i| i.point),
                ci_lower: iv.map(|i| i.lower),
                ci_upper: iv.map(|i| i.upper),
                valid_resamples: iv.map(|i| i.valid_resamples),
                skipped_resamples: iv.map(|i| i.skipped_resamples),
            })
            .collect()
    }
}

pub const METRIC_NAMES: [&str; 6] = ["auroc", "sensitivity", "specificity", "ppv", "npv", "accuracy"];

/// Pair indices grouped by patient, in patient-id order.
pub fn patient_clusters(pairs: &[ScoredPair]) -> Vec<Vec<usize>> {
    let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        m.entry(&p.patient_id).or_default().push(i);
    }
    m.into_values().collect()
}

/// AUROC and threshold metrics with patient-clustered CIs. `tau` is used
/// as given; nothing here re-tunes it.
pub fn evaluate_endpoint(
    set: &str,
    pairs: &[ScoredPair],
    tau: f64,
    endpoint: Endpoint,
    boot: &BootstrapConfig,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    if let Some(p) = pairs.iter().find(|p| !p.score.is_finite()) {
        return Err(EvalError::Input(format!("non-finite score for {}", p.record_id)));
    }
    let scores: Vec<f64> = pairs.iter().map(|p| p.score).collect();
    let labels: Vec<bool> = pairs.iter().map(|p| endpoint.label(p)).collect();
    let clusters = patient_clusters(pairs);
    let metric = |idx: &[usize]| -> Vec<Option<f64>> {
        let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        let m = confusion_metrics(&s, &l, tau);
        vec![auroc(&s, &l), m.sensitivity, m.specificity, m.ppv, m.npv, m.accuracy]
    };
    let mut res = clustered_bootstrap_each(&clusters, &METRIC_NAMES, metric, boot, exec).into_iter();
    let auroc_iv = res.next().unwrap().map_err(|e| match e {
        EvalError::Undefined(_) => EvalError::Undefined(format!("AUROC ({}, {set})", endpoint.as_str())),
        other => other,
    })?;
    let mut est = || {
        let r = res.next().unwrap();
        match r {
            Ok(iv) => MetricEstimate {
                interval: Some(iv),
                not_applicable: None,
            },
            Err(e) => MetricEstimate {
                interval: None,
                not_applicable: Some(e.to_string()),
            },
        }
    };
    let (sensitivity, specificity, ppv, npv, accuracy) = (est(), est(), est(), est(), est());
    let n_positive = labels.iter().filter(|&&l| l).count();
    Ok(EvalReport {
        set: set.to_string(),
        endpoint,
        n_pairs: pairs.len(),
        n_patients: clusters.len(),
        n_positive,
        prevalence: n_positive as f64 / pairs.len() as f64,
        tau,
        auroc: auroc_iv,
        sensitivity,
        specificity,
        ppv,
        npv,
        accuracy,
        bootstrap: *boot,
        config_hash: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs() -> Vec<ScoredPair> {
        (0..60)
            .map(|i| {
                let k = 3.8 + (i % 12) as f64 * 0.25;
                let score = ((k - 3.5) / 3.5 + ((i * 7) % 5) as f64 * 0.03).min(0.99);
                ScoredPair::new(&format!("R{i}"), &format!("P{:02}", i / 2), score, k)
            })
            .collect()
    }

    #[test]
    fn brackets_and_deterministic() {
        let p = pairs();
        let b = BootstrapConfig { resamples: 300, seed: 11 };
        let r1 = evaluate_endpoint("t", &p, 0.5, Endpoint::Primary, &b, Execution::Parallel).unwrap();
        let r2 = evaluate_endpoint("t", &p, 0.5, Endpoint::Primary, &b, Execution::Sequential).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        for (_, iv) in r1.metrics() {
            let iv = iv.unwrap();
            assert!(iv.lower <= iv.point && iv.point <= iv.upper);
        }
        assert_eq!(r1.n_patients, 30);
    }

    #[test]
    fn single_class_fails() {
        let p: Vec<ScoredPair> = pairs().into_iter().filter(|p| p.potassium < 5.0).collect();
        let e = evaluate_endpoint("t", &p, 0.5, Endpoint::Primary, &BootstrapConfig::default(), Execution::Sequential);
        assert!(matches!(e, Err(EvalError::Undefined(_))));
    }

    #[test]
    fn ppv_not_applicable_when_nothing_flagged() {
        let p = pairs();
        let r = evaluate_endpoint("t", &p, 0.999, Endpoint::Primary, &BootstrapConfig { resamples: 50, seed: 1 }, Execution::Sequential).unwrap();
        assert!(r.ppv.interval.is_none() && r.ppv.not_applicable.is_some());
        let row = r.metric_rows().into_iter().find(|m| m.metric == "ppv").unwrap();
        assert_eq!(row.point, None);
    }
}
