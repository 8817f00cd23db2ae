//! Per-patient potassium/risk trajectories and exemplar selection.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::records::{format_timestamp, Timestamp};
use crate::provenance::{write_csv, Provenance};
pub use crate::synthdata::TrajectoryPattern;

/// Minimum excursion (mmol/L) for a pattern to count.
pub const PATTERN_DELTA: f64 = 0.5;
/// Steps smaller than this are ignored when counting direction changes.
pub const FLUCTUATION_STEP: f64 = 0.1;

/// One scored pair with its ECG time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedScore {
    pub record_id: String,
    pub patient_id: String,
    pub timestamp: Timestamp,
    pub potassium: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub timestamp: Timestamp,
    pub potassium: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub patient_id: String,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrackNotice {
    TooFewPairs { patient_id: String, n: usize },
    DuplicateTimestamp { patient_id: String },
}

/// Chronological series for one patient; `None` (with a notice) below two
/// pairs or on a repeated timestamp.
pub fn track_patient(patient_id: &str, scored: &[TimedScore]) -> Result<Trajectory, TrackNotice> {
    let mut pts: Vec<TrajectoryPoint> = scored
        .iter()
        .filter(|s| s.patient_id == patient_id)
        .map(|s| TrajectoryPoint {
            timestamp: s.timestamp,
            potassium: s.potassium,
            risk: s.risk,
        })
        .collect();
    if pts.len() < 2 {
        return Err(TrackNotice::TooFewPairs {
            patient_id: patient_id.to_string(),
            n: pts.len(),
        });
    }
    pts.sort_by_key(|p| p.timestamp);
    if pts.windows(2).any(|w| w[0].timestamp == w[1].timestamp) {
        return Err(TrackNotice::DuplicateTimestamp {
            patient_id: patient_id.to_string(),
        });
    }
    Ok(Trajectory {
        patient_id: patient_id.to_string(),
        points: pts,
    })
}

/// Trajectories for every patient with at least two pairs, by patient id.
pub fn track_all(scored: &[TimedScore]) -> (Vec<Trajectory>, Vec<TrackNotice>) {
    let mut by: BTreeMap<&str, Vec<TimedScore>> = BTreeMap::new();
    for s in scored {
        by.entry(&s.patient_id).or_default().push(s.clone());
    }
    let mut out = Vec::new();
    let mut notices = Vec::new();
    for (pid, v) in by {
        match track_patient(pid, &v) {
            Ok(t) => out.push(t),
            Err(TrackNotice::TooFewPairs { .. }) => {}
            Err(n) => notices.push(n),
        }
    }
    (out, notices)
}

pub fn matches_pattern(k: &[f64], pattern: TrajectoryPattern) -> bool {
    if k.len() < 2 {
        return false;
    }
    let first = k[0];
    let last = *k.last().unwrap();
    let (imax, max) = k.iter().copied().enumerate().fold((0, f64::MIN), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let (imin, min) = k.iter().copied().enumerate().fold((0, f64::MAX), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    let n = k.len() - 1;
    match pattern {
        TrajectoryPattern::Rise => last - first >= PATTERN_DELTA && imax == n,
        TrajectoryPattern::Decline => first - last >= PATTERN_DELTA && imin == n,
        TrajectoryPattern::Recovery => max - first >= PATTERN_DELTA && max - last >= PATTERN_DELTA,
        TrajectoryPattern::Fluctuation => {
            let signs: Vec<f64> = k
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|d| d.abs() >= FLUCTUATION_STEP)
                .map(f64::signum)
                .collect();
            let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
            changes >= 2 && max - min >= PATTERN_DELTA
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarIndex {
    /// Pattern → lowest matching patient id, or `None` if absent.
    pub exemplars: BTreeMap<TrajectoryPattern, Option<String>>,
    pub n_trajectories: usize,
    pub provenance: Option<Provenance>,
}

/// Up to one patient per pattern: the lowest patient id that matches.
/// A patient may serve only one pattern; patterns are filled in a fixed order.
pub fn select_exemplars(trajectories: &[Trajectory]) -> ExemplarIndex {
    let mut sorted: Vec<&Trajectory> = trajectories.iter().collect();
    sorted.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    let mut used = std::collections::BTreeSet::new();
    let mut exemplars = BTreeMap::new();
    for pat in TrajectoryPattern::ALL {
        let hit = sorted.iter().find(|t| {
            !used.contains(&t.patient_id)
                && matches_pattern(&t.points.iter().map(|p| p.potassium).collect::<Vec<_>>(), pat)
        });
        if let Some(t) = hit {
            used.insert(t.patient_id.clone());
        }
        exemplars.insert(pat, hit.map(|t| t.patient_id.clone()));
    }
    ExemplarIndex {
        exemplars,
        n_trajectories: trajectories.len(),
        provenance: None,
    }
}

#[derive(Serialize)]
struct Row {
    timestamp: String,
    potassium_mmol_l: f64,
    risk: f64,
}

pub fn write_trajectory_csv(path: &Path, t: &Trajectory, prov: Option<&Provenance>) -> Result<(), csv::Error> {
    let rows: Vec<Row> = t
        .points
        .iter()
        .map(|p| Row {
            timestamp: format_timestamp(&p.timestamp),
            potassium_mmol_l: p.potassium,
            risk: p.risk,
        })
        .collect();
    write_csv(path, prov, &rows)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn series(pid: &str, ks: &[f64]) -> Vec<TimedScore> {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        ks.iter()
            .enumerate()
            .map(|(i, &k)| TimedScore {
                record_id: format!("{pid}-{i}"),
                patient_id: pid.into(),
                timestamp: t0 + Duration::days(30 * (ks.len() - i) as i64),
                potassium: k,
                risk: k / 10.0,
            })
            .collect()
    }

    #[test]
    fn sorted_output() {
        let s = series("A", &[4.0, 5.0, 6.0]);
        let t = track_patient("A", &s).unwrap();
        assert_eq!(t.points.len(), 3);
        assert!(t.points.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
    }

    #[test]
    fn single_pair_skipped() {
        let s = series("A", &[4.0]);
        assert!(matches!(track_patient("A", &s), Err(TrackNotice::TooFewPairs { n: 1, .. })));
    }

    #[test]
    fn injected_patterns_match_themselves_only() {
        for p in TrajectoryPattern::ALL {
            let ks = p.potassium_series();
            for q in TrajectoryPattern::ALL {
                assert_eq!(matches_pattern(&ks, q), p == q, "{p:?} vs {q:?}");
            }
        }
    }

    #[test]
    fn flat_cohort_has_no_exemplars() {
        let mut all = series("A", &[4.2; 6]);
        all.extend(series("B", &[4.1, 4.2, 4.1, 4.2]));
        let (t, _) = track_all(&all);
        let idx = select_exemplars(&t);
        assert!(idx.exemplars.values().all(Option::is_none));
    }

    #[test]
    fn lowest_id_wins() {
        // series() stamps in reverse, so feed reversed K to get a rise.
        let rise: Vec<f64> = TrajectoryPattern::Rise.potassium_series().iter().rev().copied().collect();
        let mut all = series("P9", &rise);
        all.extend(series("P1", &rise));
        let (t, _) = track_all(&all);
        let idx = select_exemplars(&t);
        assert_eq!(idx.exemplars[&TrajectoryPattern::Rise].as_deref(), Some("P1"));
        assert_eq!(select_exemplars(&t), idx);
    }

    #[test]
    fn spearman_basic() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
