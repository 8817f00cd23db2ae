//! ECG-anchored pairing: each ECG takes the closest non-hemolysed lab
//! within the window; equidistant labs resolve to the earlier one.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::records::{format_timestamp, parse_timestamp, LabResult, Recording, Timestamp};
use super::{label_primary, label_severe, IngestError, Partition};

#[derive(Debug, Clone, PartialEq)]
pub struct EcgPotassiumPair {
    pub record_id: String,
    pub patient_id: String,
    pub ecg_timestamp: Timestamp,
    pub lab_id: String,
    pub lab_timestamp: Timestamp,
    pub delta_minutes: f64,
    pub potassium: f64,
    pub label_primary: bool,
    pub label_severe: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingTally {
    pub ecgs_considered: usize,
    pub paired: usize,
    pub no_eligible_lab: usize,
    /// Second and later ECGs of a patient sharing an identical timestamp.
    pub duplicate_timestamp: usize,
    pub hemolysed_labs_excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairingOutcome {
    pub pairs: Vec<EcgPotassiumPair>,
    pub tally: PairingTally,
    pub unpaired_record_ids: Vec<String>,
}

/// Pair each recording with its closest eligible lab within ±`window_minutes`.
///
/// Output pairs are ordered by (patient, ECG time, record id) regardless of
/// input order.
pub fn pair_ecg_to_lab(
    recordings: &[Recording],
    labs: &[LabResult],
    window_minutes: f64,
) -> PairingOutcome {
    let mut out = PairingOutcome::default();
    let mut by_patient: BTreeMap<&str, Vec<&LabResult>> = BTreeMap::new();
    for lab in labs {
        if lab.hemolysed {
            out.tally.hemolysed_labs_excluded += 1;
            continue;
        }
        by_patient.entry(lab.patient_id.as_str()).or_default().push(lab);
    }
    for v in by_patient.values_mut() {
        v.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.lab_id.cmp(&b.lab_id)));
    }

    let mut recs: Vec<&Recording> = recordings.iter().collect();
    recs.sort_by(|a, b| {
        (a.patient_id.as_str(), a.timestamp, a.record_id.as_str())
            .cmp(&(b.patient_id.as_str(), b.timestamp, b.record_id.as_str()))
    });
    let window_s = window_minutes * 60.0;
    let mut seen: HashSet<(&str, Timestamp)> = HashSet::new();
    let mut seen_ids: HashSet<&str> = HashSet::new();

    for rec in recs {
        if !seen_ids.insert(rec.record_id.as_str()) || !seen.insert((rec.patient_id.as_str(), rec.timestamp)) {
            out.tally.duplicate_timestamp += 1;
            continue;
        }
        out.tally.ecgs_considered += 1;
        let best = by_patient.get(rec.patient_id.as_str()).and_then(|cands| {
            let mut best: Option<(i64, &LabResult)> = None;
            for lab in cands {
                let d = (lab.timestamp - rec.timestamp).num_seconds().abs();
                if d as f64 > window_s {
                    continue;
                }
                // Candidates are time-sorted, so strict `<` keeps the earlier lab on ties.
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, lab));
                }
            }
            best
        });
        match best {
            Some((d, lab)) => {
                out.tally.paired += 1;
                out.pairs.push(EcgPotassiumPair {
                    record_id: rec.record_id.clone(),
                    patient_id: rec.patient_id.clone(),
                    ecg_timestamp: rec.timestamp,
                    lab_id: lab.lab_id.clone(),
                    lab_timestamp: lab.timestamp,
                    delta_minutes: d as f64 / 60.0,
                    potassium: lab.potassium,
                    label_primary: label_primary(lab.potassium),
                    label_severe: label_severe(lab.potassium),
                });
            }
            None => {
                out.tally.no_eligible_lab += 1;
                out.unpaired_record_ids.push(rec.record_id.clone());
            }
        }
    }
    out
}

/// Pairs CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub record_id: String,
    pub patient_id: String,
    pub lab_id: String,
    pub delta_minutes: f64,
    pub potassium_mmol_l: f64,
    pub label_primary: u8,
    pub label_severe: u8,
    pub partition: String,
    pub ecg_timestamp: String,
    pub lab_timestamp: String,
    pub site: String,
}

impl PairRow {
    pub fn from_pair(p: &EcgPotassiumPair, partition: Option<Partition>, site: &str) -> Self {
        Self {
            record_id: p.record_id.clone(),
            patient_id: p.patient_id.clone(),
            lab_id: p.lab_id.clone(),
            delta_minutes: p.delta_minutes,
            potassium_mmol_l: p.potassium,
            label_primary: p.label_primary as u8,
            label_severe: p.label_severe as u8,
            partition: partition.map(|p| p.as_str().to_string()).unwrap_or_default(),
            ecg_timestamp: format_timestamp(&p.ecg_timestamp),
            lab_timestamp: format_timestamp(&p.lab_timestamp),
            site: site.to_string(),
        }
    }

    pub fn to_pair(&self) -> Result<EcgPotassiumPair, IngestError> {
        let ecg = parse_timestamp(&self.ecg_timestamp)
            .ok_or_else(|| IngestError::BadRow(format!("{}: ecg_timestamp", self.record_id)))?;
        let lab = parse_timestamp(&self.lab_timestamp)
            .ok_or_else(|| IngestError::BadRow(format!("{}: lab_timestamp", self.record_id)))?;
        Ok(EcgPotassiumPair {
            record_id: self.record_id.clone(),
            patient_id: self.patient_id.clone(),
            ecg_timestamp: ecg,
            lab_id: self.lab_id.clone(),
            lab_timestamp: lab,
            delta_minutes: self.delta_minutes,
            potassium: self.potassium_mmol_l,
            label_primary: self.label_primary == 1,
            label_severe: self.label_severe == 1,
        })
    }

    pub fn partition(&self) -> Option<Partition> {
        Partition::parse(&self.partition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    fn rec(id: &str, pid: &str, t: &str) -> Recording {
        Recording {
            record_id: id.into(),
            patient_id: pid.into(),
            timestamp: ts(t),
            fs_hz: 500,
            n_samples: 5000,
            file_path: String::new(),
            true_k: None,
        }
    }

    fn lab(id: &str, pid: &str, t: &str, k: f64, hemolysed: bool) -> LabResult {
        LabResult {
            lab_id: id.into(),
            patient_id: pid.into(),
            timestamp: ts(t),
            potassium: k,
            hemolysed,
        }
    }

    #[test]
    fn nearest_in_window() {
        let out = pair_ecg_to_lab(
            &[rec("E1", "P1", "2020-01-01T10:00:00Z")],
            &[
                lab("L1", "P1", "2020-01-01T09:40:00Z", 4.1, false),
                lab("L2", "P1", "2020-01-01T10:30:00Z", 5.8, false),
            ],
            60.0,
        );
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].lab_id, "L1");
        assert_eq!(out.pairs[0].delta_minutes, 20.0);
        assert!(!out.pairs[0].label_primary);
    }

    #[test]
    fn outside_window_excluded() {
        let out = pair_ecg_to_lab(
            &[rec("E1", "P1", "2020-01-01T10:00:00Z")],
            &[lab("L1", "P1", "2020-01-01T11:05:00Z", 4.1, false)],
            60.0,
        );
        assert!(out.pairs.is_empty());
        assert_eq!(out.tally.no_eligible_lab, 1);
        assert_eq!(out.unpaired_record_ids, vec!["E1".to_string()]);
    }

    #[test]
    fn hemolysed_lab_skipped() {
        let out = pair_ecg_to_lab(
            &[rec("E1", "P1", "2020-01-01T10:00:00Z")],
            &[
                lab("L1", "P1", "2020-01-01T10:05:00Z", 6.9, true),
                lab("L2", "P1", "2020-01-01T10:20:00Z", 4.4, false),
            ],
            60.0,
        );
        assert_eq!(out.pairs[0].lab_id, "L2");
        assert_eq!(out.tally.hemolysed_labs_excluded, 1);
    }

    #[test]
    fn equidistant_tie_takes_earlier_lab_in_any_order() {
        let recs = [rec("E1", "P1", "2020-01-01T10:00:00Z")];
        let a = lab("L9", "P1", "2020-01-01T09:30:00Z", 4.0, false);
        let b = lab("L1", "P1", "2020-01-01T10:30:00Z", 6.0, false);
        let o1 = pair_ecg_to_lab(&recs, &[a.clone(), b.clone()], 60.0);
        let o2 = pair_ecg_to_lab(&recs, &[b, a], 60.0);
        assert_eq!(o1.pairs[0].lab_id, "L9");
        assert_eq!(o1, o2);
    }

    #[test]
    fn labs_of_other_patients_ignored_and_reuse_allowed() {
        let out = pair_ecg_to_lab(
            &[
                rec("E1", "P1", "2020-01-01T10:00:00Z"),
                rec("E2", "P1", "2020-01-01T10:10:00Z"),
            ],
            &[
                lab("L1", "P2", "2020-01-01T10:00:00Z", 4.0, false),
                lab("L2", "P1", "2020-01-01T10:05:00Z", 5.6, false),
            ],
            60.0,
        );
        assert_eq!(out.pairs.len(), 2);
        assert!(out.pairs.iter().all(|p| p.lab_id == "L2"));
    }

    #[test]
    fn duplicate_timestamps_rejected() {
        let out = pair_ecg_to_lab(
            &[
                rec("E1", "P1", "2020-01-01T10:00:00Z"),
                rec("E2", "P1", "2020-01-01T10:00:00Z"),
            ],
            &[lab("L1", "P1", "2020-01-01T10:05:00Z", 4.0, false)],
            60.0,
        );
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.tally.duplicate_timestamp, 1);
    }

    #[test]
    fn empty_inputs() {
        let out = pair_ecg_to_lab(&[], &[], 60.0);
        assert!(out.pairs.is_empty());
        assert_eq!(out.tally, PairingTally::default());
    }

    proptest! {
        #[test]
        fn pairs_are_unique_clean_and_in_window(
            ecg_min in proptest::collection::vec(0i64..2000, 1..20),
            lab_spec in proptest::collection::vec((0i64..2000, any::<bool>(), 3.0f64..8.0), 0..30),
            window in 0.0f64..120.0,
        ) {
            let base = ts("2020-01-01T00:00:00Z");
            let recs: Vec<Recording> = ecg_min.iter().enumerate().map(|(i, m)| Recording {
                record_id: format!("E{i}"),
                patient_id: format!("P{}", i % 3),
                timestamp: base + chrono::Duration::minutes(*m),
                fs_hz: 500, n_samples: 5000, file_path: String::new(), true_k: None,
            }).collect();
            let labs: Vec<LabResult> = lab_spec.iter().enumerate().map(|(i, (m, h, k))| LabResult {
                lab_id: format!("L{i}"),
                patient_id: format!("P{}", i % 3),
                timestamp: base + chrono::Duration::minutes(*m),
                potassium: *k,
                hemolysed: *h,
            }).collect();
            let out = pair_ecg_to_lab(&recs, &labs, window);
            let mut ids = HashSet::new();
            for p in &out.pairs {
                prop_assert!(ids.insert(p.record_id.clone()));
                prop_assert!(p.delta_minutes <= window);
                let l = labs.iter().find(|l| l.lab_id == p.lab_id).unwrap();
                prop_assert!(!l.hemolysed);
                prop_assert_eq!(&l.patient_id, &p.patient_id);
                prop_assert!(!p.label_severe || p.label_primary);
            }
            prop_assert_eq!(
                out.tally.ecgs_considered,
                out.tally.paired + out.tally.no_eligible_lab
            );
        }
    }
}
