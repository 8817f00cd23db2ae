//! Provenance stamps and CSV helpers shared by every artifact writer.
//!
//! CSV artifacts start with one `#` comment line carrying the stamp; the
//! readers here skip comment lines, so files remain plain CSV to any tool
//! that honours `#` comments.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seeds: &[(&str, u64)]) -> Self {
        Self {
            tool: "pocketk".to_string(),
            version: crate::VERSION.to_string(),
            config_hash: config_hash.into(),
            seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn csv_comment(&self) -> String {
        let mut line = format!(
            "# {} {} config_hash={}",
            self.tool, self.version, self.config_hash
        );
        for (k, v) in &self.seeds {
            line.push_str(&format!(" seed.{k}={v}"));
        }
        line
    }
}

/// Short hex SHA-256 of the JSON serialization of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize");
    let digest = Sha256::digest(&bytes);
    format!("{digest:x}")[..16].to_string()
}

pub fn csv_reader(path: &Path) -> csv::Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
}

pub fn csv_writer(path: &Path, provenance: Option<&Provenance>) -> std::io::Result<csv::Writer<File>> {
    let mut file = File::create(path)?;
    if let Some(p) = provenance {
        writeln!(file, "{}", p.csv_comment())?;
    }
    Ok(csv::Writer::from_writer(file))
}

/// Serialize rows to a CSV file with an optional provenance comment.
pub fn write_csv<T: Serialize>(
    path: &Path,
    provenance: Option<&Provenance>,
    rows: &[T],
) -> Result<(), csv::Error> {
    let mut w = csv_writer(path, provenance)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, csv::Error> {
    let mut r = csv_reader(path)?;
    r.deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        a: u32,
        b: String,
    }

    #[test]
    fn comment_line_is_skipped_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let prov = Provenance::new("abc", &[("split", 7)]);
        let rows = vec![Row { a: 1, b: "x".into() }, Row { a: 2, b: "y".into() }];
        write_csv(&path, Some(&prov), &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# pocketk "));
        assert!(text.contains("seed.split=7"));
        let back: Vec<Row> = read_csv(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn hash_is_stable() {
        let h1 = hash_json(&vec![1, 2, 3]);
        let h2 = hash_json(&vec![1, 2, 3]);
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 16);
        assert_ne!(h1, hash_json(&vec![1, 2, 4]));
    }
}
