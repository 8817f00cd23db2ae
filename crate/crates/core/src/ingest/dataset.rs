//! A parsed site: cohort tables plus access to the waveforms, either from
//! a cohort directory on disk or held in memory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::records::{
    parse_diagnoses, parse_labs, parse_recordings, DemographicsRow, Diagnosis, DiagnosisRow,
    LabResult, LabRow, ManifestRow, ParseTally, Recording,
};
use super::IngestError;
use crate::provenance::read_csv;
use crate::synthdata::{Cohort, DEMOGRAPHICS_FILE, DIAGNOSES_FILE, LABS_FILE, MANIFEST_FILE};
use crate::wire::{self, Waveform, WireError};

#[derive(Debug, Clone)]
pub enum WaveformStore {
    Directory(PathBuf),
    Memory(BTreeMap<String, Waveform>),
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub site: String,
    pub recordings: Vec<Recording>,
    pub labs: Vec<LabResult>,
    pub diagnoses: Vec<Diagnosis>,
    pub demographics: Vec<DemographicsRow>,
    pub parse_tallies: BTreeMap<String, ParseTally>,
    store: WaveformStore,
}

fn load<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>, IngestError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(IngestError::MissingFile {
            path: path.display().to_string(),
        });
    }
    read_csv(&path).map_err(|source| IngestError::Csv {
        path: path.display().to_string(),
        source,
    })
}

impl Dataset {
    pub fn from_rows(
        site: &str,
        manifest: &[ManifestRow],
        labs: &[LabRow],
        diagnoses: &[DiagnosisRow],
        demographics: Vec<DemographicsRow>,
        store: WaveformStore,
    ) -> Self {
        let (recordings, t_rec) = parse_recordings(manifest);
        let (labs, t_lab) = parse_labs(labs);
        let (diagnoses, t_dx) = parse_diagnoses(diagnoses);
        for (name, t) in [("manifest", &t_rec), ("labs", &t_lab), ("diagnoses", &t_dx)] {
            if t.total() > 0 {
                log::warn!("{site}: rejected {} {name} rows ({t:?})", t.total());
            }
        }
        let parse_tallies = [
            ("manifest".to_string(), t_rec),
            ("labs".to_string(), t_lab),
            ("diagnoses".to_string(), t_dx),
        ]
        .into();
        Self {
            site: site.to_string(),
            recordings,
            labs,
            diagnoses,
            demographics,
            parse_tallies,
            store,
        }
    }

    /// Reads a cohort directory in the synthdata layout.
    pub fn load_dir(site: &str, dir: &Path) -> Result<Self, IngestError> {
        let manifest: Vec<ManifestRow> = load(dir, MANIFEST_FILE)?;
        let labs: Vec<LabRow> = load(dir, LABS_FILE)?;
        let diagnoses: Vec<DiagnosisRow> = load(dir, DIAGNOSES_FILE)?;
        let demographics: Vec<DemographicsRow> = load(dir, DEMOGRAPHICS_FILE)?;
        Ok(Self::from_rows(
            site,
            &manifest,
            &labs,
            &diagnoses,
            demographics,
            WaveformStore::Directory(dir.to_path_buf()),
        ))
    }

    /// Takes ownership of an in-memory cohort.
    pub fn from_cohort(site: &str, cohort: Cohort) -> Self {
        let manifest = cohort.manifest();
        let waves = cohort
            .recordings
            .into_iter()
            .map(|r| (r.manifest.record_id, r.waveform))
            .collect();
        Self::from_rows(
            site,
            &manifest,
            &cohort.labs,
            &cohort.diagnoses,
            cohort.demographics,
            WaveformStore::Memory(waves),
        )
    }

    pub fn recording(&self, record_id: &str) -> Option<&Recording> {
        self.recordings.iter().find(|r| r.record_id == record_id)
    }

    pub fn recording_index(&self) -> BTreeMap<&str, &Recording> {
        self.recordings.iter().map(|r| (r.record_id.as_str(), r)).collect()
    }

    pub fn waveform(&self, rec: &Recording) -> Result<Waveform, WireError> {
        let w = match &self.store {
            WaveformStore::Directory(dir) => wire::read_file(&dir.join(&rec.file_path))?,
            WaveformStore::Memory(map) => map.get(&rec.record_id).cloned().ok_or_else(|| WireError::Io {
                path: rec.record_id.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no waveform in memory"),
            })?,
        };
        if w.fs_hz != rec.fs_hz || w.samples.len() as u32 != rec.n_samples {
            log::warn!(
                "{}: manifest says {} Hz/{} samples, file has {} Hz/{}",
                rec.record_id,
                rec.fs_hz,
                rec.n_samples,
                w.fs_hz,
                w.samples.len()
            );
        }
        Ok(w)
    }

    pub fn demographics_map(&self) -> BTreeMap<String, DemographicsRow> {
        self.demographics
            .iter()
            .map(|d| (d.patient_id.clone(), d.clone()))
            .collect()
    }

    pub fn screened_patients(&self) -> impl Iterator<Item = &str> {
        self.demographics.iter().map(|d| d.patient_id.as_str())
    }
}
