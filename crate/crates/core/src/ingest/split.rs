//! Leakage-safe partitioning: chronological cutoff, then a patient-level
//! split of the development period.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pairing::EcgPotassiumPair;
use super::records::Timestamp;
use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Partition {
    #[serde(rename = "development:finetune")]
    Finetune,
    #[serde(rename = "development:model_selection")]
    ModelSelection,
    #[serde(rename = "development:internal_test")]
    InternalTest,
    #[serde(rename = "temporal_validation")]
    TemporalValidation,
    #[serde(rename = "external_validation")]
    ExternalValidation,
    #[serde(rename = "excluded")]
    Excluded,
}

impl Partition {
    pub const ALL: [Partition; 6] = [
        Partition::Finetune,
        Partition::ModelSelection,
        Partition::InternalTest,
        Partition::TemporalValidation,
        Partition::ExternalValidation,
        Partition::Excluded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Finetune => "development:finetune",
            Partition::ModelSelection => "development:model_selection",
            Partition::InternalTest => "development:internal_test",
            Partition::TemporalValidation => "temporal_validation",
            Partition::ExternalValidation => "external_validation",
            Partition::Excluded => "excluded",
        }
    }

    /// File-name friendly short form.
    pub fn slug(self) -> &'static str {
        match self {
            Partition::Finetune => "finetune",
            Partition::ModelSelection => "model_selection",
            Partition::InternalTest => "internal_test",
            Partition::TemporalValidation => "temporal_validation",
            Partition::ExternalValidation => "external_validation",
            Partition::Excluded => "excluded",
        }
    }

    pub fn parse(s: &str) -> Option<Partition> {
        Partition::ALL
            .into_iter()
            .find(|p| p.as_str() == s || p.slug() == s)
    }

    pub fn is_development(self) -> bool {
        matches!(
            self,
            Partition::Finetune | Partition::ModelSelection | Partition::InternalTest
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChronologicalSplit {
    pub development: Vec<EcgPotassiumPair>,
    pub temporal: Vec<EcgPotassiumPair>,
    /// Post-cutoff pairs of patients already seen before the cutoff.
    pub dropped: Vec<EcgPotassiumPair>,
    pub spanning_patients: Vec<String>,
}

/// Pre-cutoff pairs go to development; post-cutoff pairs go to temporal
/// validation only for patients with no pre-cutoff pair.
pub fn chronological_split(pairs: &[EcgPotassiumPair], cutoff: Timestamp) -> ChronologicalSplit {
    let dev_patients: BTreeSet<&str> = pairs
        .iter()
        .filter(|p| p.ecg_timestamp < cutoff)
        .map(|p| p.patient_id.as_str())
        .collect();
    let mut out = ChronologicalSplit::default();
    let mut spanning = BTreeSet::new();
    for p in pairs {
        if p.ecg_timestamp < cutoff {
            out.development.push(p.clone());
        } else if dev_patients.contains(p.patient_id.as_str()) {
            spanning.insert(p.patient_id.clone());
            out.dropped.push(p.clone());
        } else {
            out.temporal.push(p.clone());
        }
    }
    out.spanning_patients = spanning.into_iter().collect();
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub partitions: BTreeMap<String, Partition>,
}

impl SplitAssignment {
    pub fn get(&self, patient_id: &str) -> Option<Partition> {
        self.partitions.get(patient_id).copied()
    }

    pub fn patients_in(&self, partition: Partition) -> BTreeSet<&str> {
        self.partitions
            .iter()
            .filter(|(_, p)| **p == partition)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Adds patients under `partition`; returns the ids that already had a
    /// different partition (left unchanged).
    pub fn assign_all<'a>(
        &mut self,
        patients: impl IntoIterator<Item = &'a str>,
        partition: Partition,
    ) -> Vec<String> {
        let mut conflicts = Vec::new();
        for id in patients {
            match self.partitions.get(id) {
                Some(p) if *p != partition => conflicts.push(id.to_string()),
                Some(_) => {}
                None => {
                    self.partitions.insert(id.to_string(), partition);
                }
            }
        }
        conflicts
    }
}

pub const MIN_SPLIT_PATIENTS: usize = 10;

/// Patient-level split by `ratios` (finetune : model selection : internal test).
///
/// Sizes are ⌊r₀N/Σr⌋, ⌊r₁N/Σr⌋ and the remainder, over the sorted and
/// seed-shuffled unique patient ids.
pub fn patient_split<S: AsRef<str>>(
    patients: &[S],
    ratios: (u32, u32, u32),
    seed: u64,
) -> Result<SplitAssignment, IngestError> {
    let total = ratios.0 + ratios.1 + ratios.2;
    if total == 0 || ratios.0 == 0 {
        return Err(IngestError::BadRatios(ratios));
    }
    let mut ids: Vec<&str> = patients
        .iter()
        .map(|s| s.as_ref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = ids.len();
    if n < MIN_SPLIT_PATIENTS {
        return Err(IngestError::TooFewPatients {
            min: MIN_SPLIT_PATIENTS,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_ft = n * ratios.0 as usize / total as usize;
    let n_ms = n * ratios.1 as usize / total as usize;
    let mut out = SplitAssignment::default();
    for (i, id) in ids.into_iter().enumerate() {
        let part = if i < n_ft {
            Partition::Finetune
        } else if i < n_ft + n_ms {
            Partition::ModelSelection
        } else {
            Partition::InternalTest
        };
        out.partitions.insert(id.to_string(), part);
    }
    Ok(out)
}

pub fn patient_split_811<S: AsRef<str>>(patients: &[S], seed: u64) -> Result<SplitAssignment, IngestError> {
    patient_split(patients, (8, 1, 1), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::records::parse_timestamp;
    use proptest::prelude::*;

    fn pair(rid: &str, pid: &str, t: &str) -> EcgPotassiumPair {
        let ts = parse_timestamp(t).unwrap();
        EcgPotassiumPair {
            record_id: rid.into(),
            patient_id: pid.into(),
            ecg_timestamp: ts,
            lab_id: format!("L-{rid}"),
            lab_timestamp: ts,
            delta_minutes: 0.0,
            potassium: 4.0,
            label_primary: false,
            label_severe: false,
        }
    }

    fn cutoff() -> Timestamp {
        parse_timestamp("2021-07-01T00:00:00Z").unwrap()
    }

    #[test]
    fn spanning_patient_keeps_only_development_pairs() {
        let pairs = vec![
            pair("E1", "A", "2020-05-01T00:00:00Z"),
            pair("E2", "A", "2022-03-01T00:00:00Z"),
            pair("E3", "B", "2022-01-01T00:00:00Z"),
            pair("E4", "B", "2022-06-01T00:00:00Z"),
        ];
        let s = chronological_split(&pairs, cutoff());
        assert_eq!(s.development.iter().map(|p| p.record_id.as_str()).collect::<Vec<_>>(), ["E1"]);
        assert_eq!(s.dropped.iter().map(|p| p.record_id.as_str()).collect::<Vec<_>>(), ["E2"]);
        assert_eq!(s.temporal.len(), 2);
        assert_eq!(s.spanning_patients, vec!["A".to_string()]);
        assert_eq!(s.development.len() + s.temporal.len() + s.dropped.len(), pairs.len());
    }

    #[test]
    fn ten_patients_split_8_1_1() {
        let ids: Vec<String> = (0..10).map(|i| format!("P{i}")).collect();
        let a = patient_split_811(&ids, 42).unwrap();
        assert_eq!(a.patients_in(Partition::Finetune).len(), 8);
        assert_eq!(a.patients_in(Partition::ModelSelection).len(), 1);
        assert_eq!(a.patients_in(Partition::InternalTest).len(), 1);
        assert_eq!(a, patient_split_811(&ids, 42).unwrap());
    }

    #[test]
    fn too_few_patients() {
        let ids: Vec<String> = (0..9).map(|i| format!("P{i}")).collect();
        assert!(matches!(
            patient_split_811(&ids, 1),
            Err(IngestError::TooFewPatients { got: 9, .. })
        ));
    }

    #[test]
    fn duplicate_ids_count_once() {
        let ids: Vec<String> = (0..30).map(|i| format!("P{}", i % 15)).collect();
        let a = patient_split_811(&ids, 3).unwrap();
        assert_eq!(a.partitions.len(), 15);
        assert_eq!(a.patients_in(Partition::Finetune).len(), 12);
    }

    #[test]
    fn partition_names_round_trip() {
        for p in Partition::ALL {
            assert_eq!(Partition::parse(p.as_str()), Some(p));
            assert_eq!(Partition::parse(p.slug()), Some(p));
        }
    }

    proptest! {
        #[test]
        fn split_is_a_disjoint_cover(n in 10usize..300, seed in any::<u64>()) {
            let ids: Vec<String> = (0..n).map(|i| format!("P{i:04}")).collect();
            let a = patient_split_811(&ids, seed).unwrap();
            prop_assert_eq!(a.partitions.len(), n);
            prop_assert_eq!(a.patients_in(Partition::Finetune).len(), n * 8 / 10);
            prop_assert_eq!(a.patients_in(Partition::ModelSelection).len(), n / 10);
        }
    }
}
