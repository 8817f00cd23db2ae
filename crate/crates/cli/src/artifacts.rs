//! Run-directory layout and artifact I/O.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use pocketk::provenance::{self, Provenance};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const PAIRS: &str = "pairs.csv";
pub const PAIRING_STARD: &str = "pairing_stard.json";
pub const SPLIT: &str = "split.csv";
pub const STARD: &str = "stard.json";
pub const BASELINE: &str = "baseline.csv";
pub const PHENOTYPES: &str = "phenotypes.csv";
pub const WEIGHTS: &str = "model/weights.json";
pub const HISTORY: &str = "model/history.csv";
pub const SCORING: &str = "eval/scoring.json";
pub const METRICS: &str = "eval/metrics.csv";
pub const WAVEFORMS: &str = "explain/averaged_waveforms.csv";
pub const EXPLAIN: &str = "explain/explain.json";
pub const REFERENCE_NEGATIVE: &str = "explain/reference_negative.json";
pub const REFERENCE_NEGATIVE_CSV: &str = "explain/reference_negative.csv";
pub const EXEMPLARS: &str = "track/exemplars.json";
pub const REPORT: &str = "report.json";

pub fn scores_file(set: &str) -> String {
    format!("eval/scores_{set}.csv")
}

pub fn report_file(set: &str, endpoint: &str) -> String {
    format!("eval/{set}_{endpoint}.json")
}

pub fn roc_file(set: &str, endpoint: &str) -> String {
    format!("eval/roc_{set}_{endpoint}.csv")
}

pub fn trajectory_file(patient: &str) -> String {
    format!("track/trajectory_{patient}.csv")
}

/// `dir/name`, or an error telling the user which subcommand makes it.
pub fn need(dir: &Path, name: &str, producer: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.exists() {
        Ok(p)
    } else {
        Err(anyhow!(
            "missing {}; run `pocketk {producer}` first",
            p.display()
        ))
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(d) = path.parent() {
        fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    Ok(())
}

/// Pretty JSON with a top-level `provenance` member.
pub fn write_json<T: Serialize>(path: &Path, prov: &Provenance, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut v = serde_json::to_value(value)?;
    match &mut v {
        serde_json::Value::Object(m) => {
            m.insert("provenance".into(), serde_json::to_value(prov)?);
        }
        other => {
            v = serde_json::json!({ "provenance": prov, "data": other.take() });
        }
    }
    fs::write(path, serde_json::to_string_pretty(&v)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_csv<T: Serialize>(path: &Path, prov: &Provenance, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    provenance::write_csv(path, Some(prov), rows).with_context(|| format!("writing {}", path.display()))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    provenance::read_csv(path).with_context(|| format!("reading {}", path.display()))
}

/// One scored recording of an evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub record_id: String,
    pub patient_id: String,
    pub site: String,
    pub partition: String,
    pub ecg_timestamp: String,
    pub potassium_mmol_l: f64,
    pub label_primary: u8,
    pub label_severe: u8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformRow {
    pub time_ms: f64,
    pub high_risk_mean: f64,
    pub high_risk_sd: f64,
    pub low_risk_mean: f64,
    pub low_risk_sd: f64,
}
