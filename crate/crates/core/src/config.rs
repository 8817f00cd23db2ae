//! Run configuration: one TOML file covering every stage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{PeakDetectorConfig, PreprocessConfig};
use crate::eval::{BootstrapConfig, Endpoint};
use crate::ingest::records::{parse_timestamp, Timestamp};
use crate::ingest::KeywordConfig;
use crate::model::{FeatureConfig, ThresholdPolicy, TrainConfig, TrainProfile};
use crate::provenance::{hash_json, Provenance};
use crate::synthdata::SynthConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub internal: SynthConfig,
    pub external: SynthConfig,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            internal: SynthConfig::default(),
            external: SynthConfig {
                patient_id_prefix: "X".into(),
                seed: SynthConfig::default().seed + 1,
                ..SynthConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairingSection {
    pub window_minutes: f64,
}

impl Default for PairingSection {
    fn default() -> Self {
        Self { window_minutes: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSection {
    /// Pairs at or after this instant form the temporal validation set.
    pub cutoff: String,
    /// Fine-tune : model selection : internal test.
    pub ratios: [u32; 3],
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            cutoff: "2021-07-01T00:00:00Z".into(),
            ratios: [8, 1, 1],
            seed: 20240501,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub profile: TrainProfile,
    pub seed: u64,
    pub paper: TrainConfig,
    pub compact: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            profile: TrainProfile::Compact,
            seed: 20240501,
            paper: TrainConfig::paper(),
            compact: TrainConfig::compact(),
        }
    }
}

impl TrainSection {
    pub fn resolved(&self) -> TrainConfig {
        let base = match self.profile {
            TrainProfile::Paper => &self.paper,
            TrainProfile::Compact => &self.compact,
        };
        TrainConfig {
            seed: self.seed,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub endpoints: Vec<Endpoint>,
    pub bootstrap: BootstrapConfig,
    pub threshold_policy: ThresholdPolicy,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            endpoints: Endpoint::ALL.to_vec(),
            bootstrap: BootstrapConfig::default(),
            threshold_policy: ThresholdPolicy::YoudenMidpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub synth: SynthSection,
    pub pairing: PairingSection,
    pub split: SplitSection,
    pub preprocess: PreprocessConfig,
    pub peaks: PeakDetectorConfig,
    pub features: FeatureConfig,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub keywords: KeywordConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            out_dir: "run".into(),
            synth: SynthSection::default(),
            pairing: PairingSection::default(),
            split: SplitSection::default(),
            preprocess: PreprocessConfig::default(),
            peaks: PeakDetectorConfig::default(),
            features: FeatureConfig::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            keywords: KeywordConfig::default(),
        }
    }
}

const DEFAULTS_HEADER: &str = "\
# pocketk run configuration (defaults).
# Pairing window ±60 min, chronological cutoff 2021-07-01, 8:1:1 patient
# split, B = 2000 patient-clustered bootstrap resamples, Youden threshold.
# [train.paper] holds the reference protocol (lr 1e-4, 30 epochs, plateau
# patience 10, decay 0.1); the compact profile (lr 1e-2, 200 epochs) is the
# default because the linear model starts from zero.
";

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn print_defaults() -> String {
        format!("{DEFAULTS_HEADER}\n{}", Self::default().to_toml())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.pairing.window_minutes >= 0.0) {
            return bad(format!("pairing.window_minutes must be >= 0, got {}", self.pairing.window_minutes));
        }
        self.cutoff()?;
        if self.split.ratios[0] == 0 {
            return bad("split.ratios needs a non-zero fine-tune share".into());
        }
        if self.eval.endpoints.is_empty() {
            return bad("eval.endpoints is empty".into());
        }
        self.train
            .resolved()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for s in [&self.synth.internal, &self.synth.external] {
            s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.synth.internal.patient_id_prefix == self.synth.external.patient_id_prefix {
            return bad("internal and external cohorts need distinct patient id prefixes".into());
        }
        Ok(())
    }

    pub fn cutoff(&self) -> Result<Timestamp, ConfigError> {
        parse_timestamp(&self.split.cutoff)
            .ok_or_else(|| ConfigError::Invalid(format!("split.cutoff {:?} is not RFC 3339", self.split.cutoff)))
    }

    pub fn ratios(&self) -> (u32, u32, u32) {
        let r = self.split.ratios;
        (r[0], r[1], r[2])
    }

    /// Hash of everything except the output/data paths.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.data_dir = PathBuf::new();
        c.out_dir = PathBuf::new();
        hash_json(&c)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(
            self.hash(),
            &[
                ("synth_internal", self.synth.internal.seed),
                ("synth_external", self.synth.external.seed),
                ("split", self.split.seed),
                ("train", self.train.seed),
                ("bootstrap", self.eval.bootstrap.seed),
            ],
        )
    }

    /// Sets every seed from one master seed.
    pub fn reseed(&mut self, seed: u64) {
        self.synth.internal.seed = seed;
        self.synth.external.seed = seed.wrapping_add(1);
        self.split.seed = seed;
        self.train.seed = seed;
        self.eval.bootstrap.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = RunConfig::default();
        let back = RunConfig::from_toml_str(&RunConfig::print_defaults()).unwrap();
        assert_eq!(d, back);
        assert_eq!(d.hash(), back.hash());
    }

    #[test]
    fn paper_values_present() {
        let d = RunConfig::default();
        assert_eq!(d.pairing.window_minutes, 60.0);
        assert_eq!(d.split.ratios, [8, 1, 1]);
        assert_eq!(d.eval.bootstrap.resamples, 2000);
        assert_eq!(d.train.paper.learning_rate, 1e-4);
        assert_eq!(d.train.paper.max_epochs, 30);
        assert_eq!(d.train.paper.patience, 10);
        assert_eq!(d.train.paper.decay, 0.1);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = RunConfig::from_toml_str("[pairing]\nwindow_minutes = 30\n[train]\nprofile = \"paper\"\n").unwrap();
        assert_eq!(c.pairing.window_minutes, 30.0);
        assert_eq!(c.train.resolved().learning_rate, 1e-4);
        assert_eq!(c.split.ratios, [8, 1, 1]);
    }

    #[test]
    fn hash_tracks_content_not_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.eval.bootstrap.resamples = 100;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_bad_cutoff() {
        assert!(RunConfig::from_toml_str("[split]\ncutoff = \"July 2021\"\n").is_err());
    }
}
