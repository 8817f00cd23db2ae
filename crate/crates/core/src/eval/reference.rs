//! Comorbidity prevalence among reference-negative pairs, split by the
//! model's risk group at τ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::report::ScoredPair;
use super::EvalError;
use crate::ingest::ComorbidityProfile;

/// Pooled two-sided two-proportion z-test. Returns `(z, p)`; no variance
/// (both proportions 0 or both 1) gives `(0, 1)`.
pub fn two_proportion_z_test(x1: usize, n1: usize, x2: usize, n2: usize) -> (f64, f64) {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = x1 as f64 / n1f;
    let p2 = x2 as f64 / n2f;
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if !(se > 0.0) {
        return (0.0, 1.0);
    }
    let z = (p2 - p1) / se;
    (z, erfc(z.abs() / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceNegativeRow {
    pub comorbidity: String,
    pub low_risk_n: usize,
    pub low_risk_count: usize,
    pub low_risk_prevalence: f64,
    pub high_risk_n: usize,
    pub high_risk_count: usize,
    pub high_risk_prevalence: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceNegativeTable {
    pub tau: f64,
    pub n_pairs: usize,
    pub n_missing_profile: usize,
    pub rows: Vec<ReferenceNegativeRow>,
}

/// Pairs with K ≤ 5.5 only; high risk means `score >= tau`. Pairs whose
/// patient has no profile are dropped and counted.
pub fn compare_reference_negative(
    pairs: &[ScoredPair],
    tau: f64,
    profiles: &BTreeMap<String, ComorbidityProfile>,
) -> Result<ReferenceNegativeTable, EvalError> {
    let negatives: Vec<&ScoredPair> = pairs.iter().filter(|p| !p.label_primary).collect();
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut missing = 0;
    for p in &negatives {
        match profiles.get(&p.patient_id) {
            Some(prof) if p.score >= tau => high.push(prof),
            Some(prof) => low.push(prof),
            None => missing += 1,
        }
    }
    if low.is_empty() {
        return Err(EvalError::EmptyGroup("low-risk reference-negative group".into()));
    }
    if high.is_empty() {
        return Err(EvalError::EmptyGroup("high-risk reference-negative group".into()));
    }
    let count = |g: &[&ComorbidityProfile], f: &str| g.iter().filter(|p| p.flag(f) == Some(true)).count();
    let rows = ComorbidityProfile::FLAGS
        .iter()
        .map(|&f| {
            let (lx, hx) = (count(&low, f), count(&high, f));
            let (z, p) = two_proportion_z_test(lx, low.len(), hx, high.len());
            ReferenceNegativeRow {
                comorbidity: f.to_string(),
                low_risk_n: low.len(),
                low_risk_count: lx,
                low_risk_prevalence: lx as f64 / low.len() as f64,
                high_risk_n: high.len(),
                high_risk_count: hx,
                high_risk_prevalence: hx as f64 / high.len() as f64,
                z,
                p_value: p,
            }
        })
        .collect();
    Ok(ReferenceNegativeTable {
        tau,
        n_pairs: negatives.len() - missing,
        n_missing_profile: missing,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn ten_vs_thirty() {
        let (z, p) = two_proportion_z_test(10, 100, 30, 100);
        // Hand computation: pooled 0.2, se = sqrt(0.2·0.8·0.02) = 0.05657.
        let se = (0.2f64 * 0.8 * 0.02).sqrt();
        assert!((z - 0.2 / se).abs() < 1e-12);
        assert!((z - 3.5355).abs() < 1e-3);
        let oracle = 2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(0.2 / se));
        assert!((p - oracle).abs() < 1e-9);
        assert!((p - 4.07e-4).abs() < 1e-5);
    }

    #[test]
    fn identical_prevalence() {
        assert_eq!(two_proportion_z_test(5, 50, 10, 100), (0.0, 1.0));
        assert_eq!(two_proportion_z_test(0, 50, 0, 100), (0.0, 1.0));
    }

    fn prof(id: &str, ckd: bool) -> ComorbidityProfile {
        ComorbidityProfile {
            patient_id: id.into(),
            ckd,
            ..Default::default()
        }
    }

    #[test]
    fn groups_and_exclusion() {
        let pairs = vec![
            ScoredPair::new("a", "A", 0.1, 4.0),
            ScoredPair::new("b", "B", 0.9, 5.0),
            ScoredPair::new("c", "C", 0.9, 6.0),
            ScoredPair::new("d", "D", 0.2, 4.5),
        ];
        let profiles: BTreeMap<_, _> = [prof("A", false), prof("B", true), prof("C", true)]
            .into_iter()
            .map(|p| (p.patient_id.clone(), p))
            .collect();
        let t = compare_reference_negative(&pairs, 0.5, &profiles).unwrap();
        let ckd = &t.rows[0];
        assert_eq!((ckd.low_risk_n, ckd.high_risk_n, ckd.high_risk_count), (1, 1, 1));
        assert_eq!(t.n_missing_profile, 1);
        assert!(compare_reference_negative(&pairs, 0.95, &profiles).is_err());
    }
}
