//! Serialized model: standardizer, coefficients, frozen threshold.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optim::sigmoid;
use super::threshold::ThresholdInfo;
use super::{FeatureVector, ModelError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Column means and sample SDs; constant columns get SD 1.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::Empty("training"));
        }
        let d = rows[0].len();
        let mut means = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                means[j] += r[j];
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut sds = vec![0.0; d];
        if n > 1 {
            for r in rows {
                for j in 0..d {
                    sds[j] += (r[j] - means[j]).powi(2);
                }
            }
            sds.iter_mut().for_each(|s| *s = (*s / (n - 1) as f64).sqrt());
        }
        for (j, s) in sds.iter_mut().enumerate() {
            if !(*s > 1e-12) {
                log::warn!("feature {j} has no spread in the training set; leaving it unscaled");
                *s = 1.0;
            }
        }
        Ok(Self { means, sds })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub profile: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_selection_auroc: f64,
    pub n_train_clips: usize,
    pub n_selection_recordings: usize,
    #[serde(default)]
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub frozen_threshold: f64,
    pub threshold: ThresholdInfo,
    pub training: TrainingMetadata,
}

impl ModelWeights {
    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.n_features() {
            return Err(ModelError::Dimension {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteFeature {
                name: self.feature_names.get(i).cloned().unwrap_or_default(),
            });
        }
        let z = self.standardizer.transform(x);
        let mut params = self.coefficients.clone();
        params.push(self.intercept);
        Ok(sigmoid(super::optim::logit(&params, &z)))
    }

    pub fn predict_proba(&self, f: &FeatureVector) -> Result<f64, ModelError> {
        self.predict_raw(&f.to_array())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let w: Self = serde_json::from_str(s).map_err(|e| ModelError::Io(e.to_string()))?;
        if w.schema_version != SCHEMA_VERSION {
            return Err(ModelError::Io(format!(
                "unsupported schema version {}",
                w.schema_version
            )));
        }
        let d = w.coefficients.len();
        if w.feature_names.len() != d || w.standardizer.means.len() != d || w.standardizer.sds.len() != d {
            return Err(ModelError::Io("inconsistent weight dimensions".into()));
        }
        Ok(w)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_json() + "\n")
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let s = fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}
