//! STARD-style flow accounting: screened → excluded (no ECG, no eligible
//! potassium, poor quality) → retained, counted in unique patients (N)
//! and ECG–potassium pairs (n).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::pairing::{EcgPotassiumPair, PairingTally};
use super::records::Recording;
use super::Partition;
use crate::provenance::Provenance;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteStard {
    pub site: String,
    pub screened: usize,
    pub excluded_no_ecg: usize,
    pub excluded_no_eligible_lab: usize,
    pub excluded_poor_quality: usize,
    /// Unique patients retained (N).
    pub retained_patients: usize,
    /// ECG–potassium pairs retained (n).
    pub retained_pairs: usize,
    pub pairing: PairingTally,
    pub pairs_failed_quality: usize,
}

impl SiteStard {
    pub fn excluded(&self) -> usize {
        self.excluded_no_ecg + self.excluded_no_eligible_lab + self.excluded_poor_quality
    }

    pub fn reconciles(&self) -> bool {
        self.screened == self.excluded() + self.retained_patients
            && self.pairing.paired == self.retained_pairs + self.pairs_failed_quality
    }
}

/// Stage-wise patient accounting for one site.
///
/// `screened` is every patient known to the site; `quality_failed` holds
/// record ids whose recordings failed the signal-quality gate.
pub fn site_accounting<'a>(
    site: &str,
    screened: impl IntoIterator<Item = &'a str>,
    recordings: &[Recording],
    pairs: &[EcgPotassiumPair],
    pairing: &PairingTally,
    quality_failed: &BTreeSet<String>,
) -> SiteStard {
    let mut screened: BTreeSet<&str> = screened.into_iter().collect();
    screened.extend(recordings.iter().map(|r| r.patient_id.as_str()));
    let with_ecg: BTreeSet<&str> = recordings.iter().map(|r| r.patient_id.as_str()).collect();
    let paired: BTreeSet<&str> = pairs.iter().map(|p| p.patient_id.as_str()).collect();
    let good: Vec<&EcgPotassiumPair> = pairs
        .iter()
        .filter(|p| !quality_failed.contains(&p.record_id))
        .collect();
    let retained: BTreeSet<&str> = good.iter().map(|p| p.patient_id.as_str()).collect();
    SiteStard {
        site: site.to_string(),
        screened: screened.len(),
        excluded_no_ecg: screened.len() - with_ecg.len(),
        excluded_no_eligible_lab: with_ecg.len() - paired.len(),
        excluded_poor_quality: paired.len() - retained.len(),
        retained_patients: retained.len(),
        retained_pairs: good.len(),
        pairing: pairing.clone(),
        pairs_failed_quality: pairs.len() - good.len(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCount {
    pub partition: String,
    pub patients: usize,
    pub pairs: usize,
}

pub fn set_counts<'a>(
    pairs: impl IntoIterator<Item = (&'a EcgPotassiumPair, Partition)>,
) -> Vec<SetCount> {
    let mut by: BTreeMap<Partition, (BTreeSet<&str>, usize)> = BTreeMap::new();
    for (p, part) in pairs {
        let e = by.entry(part).or_default();
        e.0.insert(p.patient_id.as_str());
        e.1 += 1;
    }
    by.into_iter()
        .map(|(part, (pts, n))| SetCount {
            partition: part.as_str().to_string(),
            patients: pts.len(),
            pairs: n,
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StardReport {
    pub sites: Vec<SiteStard>,
    /// Post-cutoff pairs dropped because the patient appeared before the cutoff.
    pub temporal_dropped_pairs: usize,
    pub temporal_spanning_patients: usize,
    pub sets: Vec<SetCount>,
    pub reconciles: bool,
    pub provenance: Option<Provenance>,
}

impl StardReport {
    /// Checks per-site flow plus conservation of retained pairs into sets.
    pub fn check(&mut self) -> bool {
        let sites_ok = self.sites.iter().all(SiteStard::reconciles);
        let retained: usize = self.sites.iter().map(|s| s.retained_pairs).sum();
        let in_sets: usize = self.sets.iter().map(|s| s.pairs).sum();
        self.reconciles = sites_ok && retained == in_sets + self.temporal_dropped_pairs;
        self.reconciles
    }
}
