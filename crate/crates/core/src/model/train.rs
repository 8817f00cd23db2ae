//! Full-batch training with plateau decay and best-AUROC checkpointing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optim::{adam_step, bce_loss_and_gradient, logit, sigmoid, AdamConfig, AdamState};
use super::threshold::freeze_threshold;
use super::weights::{ModelWeights, Standardizer, TrainingMetadata, SCHEMA_VERSION};
use super::ModelError;
use crate::eval::metrics::auroc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrainProfile {
    /// lr 1e-4, 30 epochs.
    Paper,
    /// lr 1e-2, 200 epochs; enough for a linear model trained from zero.
    #[default]
    Compact,
}

impl TrainProfile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Self::Paper),
            "compact" => Some(Self::Compact),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Compact => "compact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub profile: String,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub decay: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl TrainConfig {
    pub fn paper() -> Self {
        Self {
            profile: "paper".into(),
            learning_rate: 1e-4,
            max_epochs: 30,
            patience: 10,
            decay: 0.1,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }

    pub fn compact() -> Self {
        Self {
            profile: "compact".into(),
            learning_rate: 1e-2,
            max_epochs: 200,
            ..Self::paper()
        }
    }

    pub fn for_profile(p: TrainProfile) -> Self {
        match p {
            TrainProfile::Paper => Self::paper(),
            TrainProfile::Compact => Self::compact(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning rate must be > 0".into()));
        }
        if self.patience < 1 {
            return Err(ModelError::Config("patience must be >= 1".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(ModelError::Config("decay must be in (0, 1)".into()));
        }
        if self.max_epochs == 0 {
            return Err(ModelError::Config("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::compact()
    }
}

/// Clip-level rows. `groups[i]` names the recording row `i` came from; all
/// clips of a recording share its label, and recording scores are the mean
/// of clip scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub groups: Vec<usize>,
}

impl LabeledSet {
    pub fn push(&mut self, row: Vec<f64>, label: bool, group: usize) {
        self.rows.push(row);
        self.labels.push(label);
        self.groups.push(group);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mean clip score per group, with the group label, in ascending group order.
    pub fn group_scores(&self, clip_scores: &[f64]) -> (Vec<f64>, Vec<bool>) {
        let mut acc: std::collections::BTreeMap<usize, (f64, usize, bool)> = Default::default();
        for ((&g, &s), &l) in self.groups.iter().zip(clip_scores).zip(&self.labels) {
            let e = acc.entry(g).or_insert((0.0, 0, l));
            e.0 += s;
            e.1 += 1;
        }
        acc.into_values()
            .map(|(s, n, l)| (s / n as f64, l))
            .unzip()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    pub val_auroc: f64,
    pub is_best: bool,
}

fn selection_scores(params: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|x| sigmoid(logit(params, x))).collect()
}

/// Trains on `finetune`, checkpoints on `selection` recording-level AUROC and
/// freezes τ on the selection set with the retained parameters.
pub fn train(
    finetune: &LabeledSet,
    selection: &LabeledSet,
    feature_names: &[&str],
    cfg: &TrainConfig,
) -> Result<(ModelWeights, Vec<EpochRecord>), ModelError> {
    cfg.validate()?;
    if finetune.is_empty() {
        return Err(ModelError::Empty("fine-tune"));
    }
    if selection.is_empty() {
        return Err(ModelError::Empty("model-selection"));
    }
    let d = feature_names.len();
    if let Some(bad) = finetune.rows.iter().chain(&selection.rows).find(|r| r.len() != d) {
        return Err(ModelError::Dimension {
            expected: d,
            got: bad.len(),
        });
    }
    let (_, sel_labels) = selection.group_scores(&vec![0.0; selection.len()]);
    if sel_labels.iter().all(|&l| l) || sel_labels.iter().all(|&l| !l) {
        return Err(ModelError::SingleClass("model-selection AUROC"));
    }

    let standardizer = Standardizer::fit(&finetune.rows)?;
    let x_train: Vec<Vec<f64>> = finetune.rows.iter().map(|r| standardizer.transform(r)).collect();
    let x_sel: Vec<Vec<f64>> = selection.rows.iter().map(|r| standardizer.transform(r)).collect();

    let mut params = vec![0.0; d + 1];
    let mut state = AdamState::new(d + 1);
    let mut lr = cfg.learning_rate;
    let mut best_auroc = f64::NEG_INFINITY;
    let mut best_params = params.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut history = Vec::with_capacity(cfg.max_epochs);

    for epoch in 1..=cfg.max_epochs {
        let (loss, grad) = bce_loss_and_gradient(&params, &x_train, &finetune.labels)?;
        let step_lr = lr;
        adam_step(&mut params, &grad, &mut state, step_lr, &cfg.adam)?;
        let (scores, labels) = selection.group_scores(&selection_scores(&params, &x_sel));
        let val = auroc(&scores, &labels).ok_or(ModelError::SingleClass("model-selection AUROC"))?;
        let is_best = val > best_auroc;
        if is_best {
            best_auroc = val;
            best_params.clone_from(&params);
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                lr *= cfg.decay;
                since_best = 0;
                log::debug!("epoch {epoch}: plateau, lr -> {lr:e}");
            }
        }
        history.push(EpochRecord {
            epoch,
            loss,
            lr: step_lr,
            val_auroc: val,
            is_best,
        });
    }

    let (scores, labels) = selection.group_scores(&selection_scores(&best_params, &x_sel));
    let threshold = freeze_threshold(&scores, &labels)?;
    if threshold.degenerate {
        log::warn!("frozen threshold is degenerate (J = 0 on the model-selection set)");
    }
    let n_selection_recordings = scores.len();
    let weights = ModelWeights {
        schema_version: SCHEMA_VERSION,
        feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
        standardizer,
        coefficients: best_params[..d].to_vec(),
        intercept: best_params[d],
        frozen_threshold: threshold.tau,
        threshold,
        training: TrainingMetadata {
            profile: cfg.profile.clone(),
            seed: cfg.seed,
            epochs_run: history.len(),
            best_epoch,
            best_selection_auroc: best_auroc,
            n_train_clips: finetune.len(),
            n_selection_recordings,
            config_hash: String::new(),
        },
    };
    Ok((weights, history))
}

pub fn write_history_csv(
    path: &Path,
    history: &[EpochRecord],
    prov: Option<&crate::provenance::Provenance>,
) -> Result<(), csv::Error> {
    crate::provenance::write_csv(path, prov, history)
}
