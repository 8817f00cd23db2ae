//! Stage functions shared by the CLI and the end-to-end tests: site
//! assembly, partitioning, training, scoring and the explanatory analyses.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::dsp::{
    bandpassed_clips, detect_r_peaks_with, extract_beats, max_abs_difference, preprocess_recording, signal_average,
    AveragedWaveform, Clip, PeakDetectorConfig, PreprocessConfig,
};
use crate::eval::{evaluate_endpoint, EvalError, EvalReport, ScoredPair};
use crate::ingest::dataset::Dataset;
use crate::ingest::records::{parse_timestamp, Recording, Timestamp};
use crate::ingest::stard::{set_counts, site_accounting};
use crate::ingest::{
    chronological_split, pair_ecg_to_lab, patient_split, phenotype, ComorbidityProfile,
    EcgPotassiumPair, IngestError, KeywordConfig, PairRow, Partition, SiteStard, SplitAssignment,
    StardReport,
};
use crate::longitudinal::TimedScore;
use crate::model::{
    aggregate_clip_scores, featurize_clip, train, ClipScorer, EpochRecord, FeatureConfig,
    LabeledSet, LogisticClipScorer, ModelError, ModelWeights, FEATURE_NAMES,
};
use crate::par::Execution;

pub const INTERNAL_SITE: &str = "internal";
pub const EXTERNAL_SITE: &str = "external";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown site {0:?}")]
    UnknownSite(String),
    #[error("record {record_id} not found at site {site}")]
    UnknownRecord { site: String, record_id: String },
    #[error("{0}")]
    Other(String),
}

/// Why a recording was set aside by the quality stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordingIssue {
    Unreadable(String),
    TooShort,
    AllClipsRejected,
    Preprocess(String),
}

/// Preprocessed, accepted clips of one recording.
pub fn recording_clips(
    ds: &Dataset,
    rec: &Recording,
    pre: &PreprocessConfig,
) -> Result<Vec<Clip>, RecordingIssue> {
    clips_via(ds, rec, pre, preprocess_recording)
}

type ChainFn = fn(&str, &[f64], f64, &PreprocessConfig) -> Result<Vec<crate::dsp::ClipOutcome>, crate::dsp::DspError>;

fn clips_via(
    ds: &Dataset,
    rec: &Recording,
    pre: &PreprocessConfig,
    chain: ChainFn,
) -> Result<Vec<Clip>, RecordingIssue> {
    let wf = ds
        .waveform(rec)
        .map_err(|e| RecordingIssue::Unreadable(e.to_string()))?;
    let outcomes = chain(&rec.record_id, &wf.to_f64(), wf.fs_hz as f64, pre)
        .map_err(|e| RecordingIssue::Preprocess(e.to_string()))?;
    if outcomes.is_empty() {
        return Err(RecordingIssue::TooShort);
    }
    let clips: Vec<Clip> = outcomes.iter().filter_map(|o| o.clip().cloned()).collect();
    if clips.is_empty() {
        return Err(RecordingIssue::AllClipsRejected);
    }
    Ok(clips)
}

/// Pairs of one site after the quality gate, with its STARD flow.
#[derive(Debug, Clone)]
pub struct SiteAssembly {
    pub site: String,
    pub pairs: Vec<EcgPotassiumPair>,
    pub stard: SiteStard,
    pub quality_failed: BTreeMap<String, RecordingIssue>,
}

pub fn assemble_site(
    ds: &Dataset,
    window_minutes: f64,
    pre: &PreprocessConfig,
    exec: Execution,
) -> SiteAssembly {
    let outcome = pair_ecg_to_lab(&ds.recordings, &ds.labs, window_minutes);
    let index = ds.recording_index();
    let checks = exec.map(&outcome.pairs, |p| {
        let rec = index[p.record_id.as_str()];
        (p.record_id.clone(), recording_clips(ds, rec, pre).err())
    });
    let quality_failed: BTreeMap<String, RecordingIssue> = checks
        .into_iter()
        .filter_map(|(id, issue)| issue.map(|i| (id, i)))
        .collect();
    let failed_ids: BTreeSet<String> = quality_failed.keys().cloned().collect();
    let stard = site_accounting(
        &ds.site,
        ds.screened_patients(),
        &ds.recordings,
        &outcome.pairs,
        &outcome.tally,
        &failed_ids,
    );
    let pairs = outcome
        .pairs
        .into_iter()
        .filter(|p| !failed_ids.contains(&p.record_id))
        .collect();
    SiteAssembly {
        site: ds.site.clone(),
        pairs,
        stard,
        quality_failed,
    }
}

#[derive(Debug, Clone)]
pub struct Partitioned {
    /// Every retained pair, including temporally dropped ones (`excluded`).
    pub rows: Vec<PairRow>,
    pub assignment: SplitAssignment,
    pub stard: StardReport,
}

/// Chronological split of the internal site, 8:1:1 patient split of the
/// development era, and the external site as a whole.
pub fn partition_sites(
    internal: &SiteAssembly,
    external: Option<&SiteAssembly>,
    cutoff: Timestamp,
    ratios: (u32, u32, u32),
    seed: u64,
) -> Result<Partitioned, PipelineError> {
    let chrono = chronological_split(&internal.pairs, cutoff);
    let dev_patients: Vec<&str> = chrono.development.iter().map(|p| p.patient_id.as_str()).collect();
    let mut assignment = patient_split(&dev_patients, ratios, seed)?;
    let temporal_ids = chrono.temporal.iter().map(|p| p.patient_id.as_str());
    let mut conflicts = assignment.assign_all(temporal_ids, Partition::TemporalValidation);
    if let Some(ext) = external {
        conflicts.extend(assignment.assign_all(
            ext.pairs.iter().map(|p| p.patient_id.as_str()),
            Partition::ExternalValidation,
        ));
    }
    if !conflicts.is_empty() {
        return Err(PipelineError::Other(format!(
            "patients assigned to two partitions: {conflicts:?}"
        )));
    }

    let mut rows = Vec::new();
    let mut in_sets: Vec<(&EcgPotassiumPair, Partition)> = Vec::new();
    for p in chrono.development.iter().chain(&chrono.temporal) {
        let part = assignment.get(&p.patient_id).expect("assigned above");
        rows.push(PairRow::from_pair(p, Some(part), INTERNAL_SITE));
        in_sets.push((p, part));
    }
    for p in &chrono.dropped {
        rows.push(PairRow::from_pair(p, Some(Partition::Excluded), INTERNAL_SITE));
    }
    let mut sites = vec![internal.stard.clone()];
    if let Some(ext) = external {
        for p in &ext.pairs {
            rows.push(PairRow::from_pair(p, Some(Partition::ExternalValidation), EXTERNAL_SITE));
            in_sets.push((p, Partition::ExternalValidation));
        }
        sites.push(ext.stard.clone());
    }
    let mut stard = StardReport {
        sites,
        temporal_dropped_pairs: chrono.dropped.len(),
        temporal_spanning_patients: chrono.spanning_patients.len(),
        sets: set_counts(in_sets),
        reconciles: false,
        provenance: None,
    };
    if !stard.check() {
        log::error!("STARD accounting does not reconcile");
    }
    Ok(Partitioned {
        rows,
        assignment,
        stard,
    })
}

/// Both sites, looked up by the `site` column of a pair row.
pub struct Sites {
    pub internal: Dataset,
    pub external: Option<Dataset>,
}

impl Sites {
    pub fn dataset(&self, site: &str) -> Result<&Dataset, PipelineError> {
        match site {
            INTERNAL_SITE => Ok(&self.internal),
            EXTERNAL_SITE => self
                .external
                .as_ref()
                .ok_or_else(|| PipelineError::UnknownSite(site.into())),
            other => Err(PipelineError::UnknownSite(other.into())),
        }
    }

    pub fn recording(&self, site: &str, record_id: &str) -> Result<(&Dataset, &Recording), PipelineError> {
        let ds = self.dataset(site)?;
        let rec = ds.recording(record_id).ok_or_else(|| PipelineError::UnknownRecord {
            site: site.into(),
            record_id: record_id.into(),
        })?;
        Ok((ds, rec))
    }

    /// Comorbidity profiles as of each patient's first paired ECG.
    pub fn phenotypes(&self, rows: &[PairRow], kw: &KeywordConfig) -> BTreeMap<String, ComorbidityProfile> {
        let mut out = BTreeMap::new();
        for ds in std::iter::once(&self.internal).chain(self.external.as_ref()) {
            let mut index: BTreeMap<String, Timestamp> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.site == ds.site) {
                if let Some(ts) = parse_timestamp(&r.ecg_timestamp) {
                    index
                        .entry(r.patient_id.clone())
                        .and_modify(|t| *t = (*t).min(ts))
                        .or_insert(ts);
                }
            }
            out.extend(phenotype(&ds.diagnoses, &index, kw));
        }
        out
    }
}

pub fn rows_in(rows: &[PairRow], part: Partition) -> Vec<&PairRow> {
    rows.iter().filter(|r| r.partition() == Some(part)).collect()
}

/// Per-clip features for each row; clips whose features fail are dropped
/// and counted.
pub fn featurize_rows(
    rows: &[&PairRow],
    sites: &Sites,
    pre: &PreprocessConfig,
    peaks: &PeakDetectorConfig,
    feats: &FeatureConfig,
    exec: Execution,
) -> Vec<(Vec<Vec<f64>>, usize)> {
    exec.map(rows, |r| {
        let Ok((ds, rec)) = sites.recording(&r.site, &r.record_id) else {
            return (Vec::new(), 0);
        };
        let clips = recording_clips(ds, rec, pre).unwrap_or_default();
        let mut ok = Vec::new();
        let mut failed = 0;
        for c in &clips {
            match featurize_clip(c, peaks, feats) {
                Ok(f) => ok.push(f.to_array().to_vec()),
                Err(_) => failed += 1,
            }
        }
        (ok, failed)
    })
}

pub fn labeled_set(rows: &[&PairRow], feats: Vec<(Vec<Vec<f64>>, usize)>) -> LabeledSet {
    let mut s = LabeledSet::default();
    for (g, (r, (clips, _))) in rows.iter().zip(feats).enumerate() {
        for c in clips {
            s.push(c, r.label_primary == 1, g);
        }
    }
    s
}

/// Trains on the fine-tune partition with the model-selection partition
/// for checkpointing and τ; no other partition is touched.
pub fn train_stage(
    rows: &[PairRow],
    sites: &Sites,
    cfg: &RunConfig,
    exec: Execution,
) -> Result<(ModelWeights, Vec<EpochRecord>), PipelineError> {
    let ft_rows = rows_in(rows, Partition::Finetune);
    let ms_rows = rows_in(rows, Partition::ModelSelection);
    let f = |rs: &[&PairRow]| featurize_rows(rs, sites, &cfg.preprocess, &cfg.peaks, &cfg.features, exec);
    let ft = labeled_set(&ft_rows, f(&ft_rows));
    let ms = labeled_set(&ms_rows, f(&ms_rows));
    log::info!(
        "training on {} clips from {} pairs; selecting on {} pairs",
        ft.len(),
        ft_rows.len(),
        ms_rows.len()
    );
    let (mut w, h) = train(&ft, &ms, &FEATURE_NAMES, &cfg.train.resolved())?;
    w.training.config_hash = cfg.hash();
    Ok((w, h))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTally {
    pub scored: usize,
    pub unscorable: usize,
    pub clips_scored: usize,
    pub clips_failed: usize,
}

/// Recording score = mean of the scorer's clip probabilities.
pub fn score_row(
    r: &PairRow,
    sites: &Sites,
    scorer: &dyn ClipScorer,
    pre: &PreprocessConfig,
) -> Result<(f64, usize, usize), String> {
    let (ds, rec) = sites.recording(&r.site, &r.record_id).map_err(|e| e.to_string())?;
    let clips = recording_clips(ds, rec, pre).map_err(|e| format!("{e:?}"))?;
    let mut probs = Vec::new();
    let mut failed = 0;
    for c in &clips {
        match scorer.score_clip(c) {
            Ok(p) => probs.push(p),
            Err(_) => failed += 1,
        }
    }
    let score = aggregate_clip_scores(&probs).ok_or_else(|| "no scorable clip".to_string())?;
    Ok((score, probs.len(), failed))
}

pub fn score_rows(
    rows: &[&PairRow],
    sites: &Sites,
    scorer: &dyn ClipScorer,
    pre: &PreprocessConfig,
    exec: Execution,
) -> (Vec<(PairRow, ScoredPair)>, ScoreTally) {
    let results = exec.map(rows, |r| score_row(r, sites, scorer, pre));
    let mut out = Vec::new();
    let mut tally = ScoreTally::default();
    for (r, res) in rows.iter().zip(results) {
        match res {
            Ok((score, ok, failed)) => {
                tally.scored += 1;
                tally.clips_scored += ok;
                tally.clips_failed += failed;
                out.push(((*r).clone(), ScoredPair::new(&r.record_id, &r.patient_id, score, r.potassium_mmol_l)));
            }
            Err(e) => {
                log::warn!("{}: not scored ({e})", r.record_id);
                tally.unscorable += 1;
            }
        }
    }
    (out, tally)
}

pub fn timed_scores(scored: &[(PairRow, ScoredPair)]) -> Vec<TimedScore> {
    scored
        .iter()
        .filter_map(|(r, s)| {
            Some(TimedScore {
                record_id: r.record_id.clone(),
                patient_id: r.patient_id.clone(),
                timestamp: parse_timestamp(&r.ecg_timestamp)?,
                potassium: s.potassium,
                risk: s.score,
            })
        })
        .collect()
}

/// Evaluation sets in reporting order.
pub const EVAL_SETS: [Partition; 3] = [
    Partition::InternalTest,
    Partition::TemporalValidation,
    Partition::ExternalValidation,
];

/// Group-mean beats (band-passed, in mV) for model high- and low-risk
/// pairs and where they differ most. Clips are not z-scored here: per-clip
/// scaling would turn a taller T wave into an apparently smaller R wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainResult {
    pub tau: f64,
    pub high: AveragedWaveform,
    pub low: AveragedWaveform,
    pub fs: f64,
    /// Offset of sample 0 relative to R, in ms.
    pub start_ms: f64,
    pub max_diff_index: usize,
    pub max_diff_ms: f64,
    pub max_diff: f64,
}

pub fn explain(
    rows: &[&PairRow],
    scores: &BTreeMap<String, f64>,
    tau: f64,
    sites: &Sites,
    pre: &PreprocessConfig,
    peaks: &PeakDetectorConfig,
    exec: Execution,
) -> Result<ExplainResult, PipelineError> {
    let per_row = exec.map(rows, |r| {
        let &score = scores.get(&r.record_id)?;
        let (ds, rec) = sites.recording(&r.site, &r.record_id).ok()?;
        let clips = clips_via(ds, rec, pre, bandpassed_clips).ok()?;
        let beats: Vec<Vec<f64>> = clips
            .iter()
            .flat_map(|c| extract_beats(&c.samples, &detect_r_peaks_with(&c.samples, c.fs, peaks)))
            .collect();
        Some((score >= tau, beats))
    });
    let (mut high, mut low) = (Vec::new(), Vec::new());
    for (is_high, beats) in per_row.into_iter().flatten() {
        if is_high {
            high.extend(beats);
        } else {
            low.extend(beats);
        }
    }
    let avg = signal_average(&[("high_risk".into(), high), ("low_risk".into(), low)])
        .map_err(|e| PipelineError::Other(e.to_string()))?;
    let (high, low) = (avg[0].clone(), avg[1].clone());
    let idx = max_abs_difference(&high, &low).unwrap_or(0);
    let fs = pre.target_fs;
    let pre_samples = (peaks.pre_r_s * fs).round();
    let start_ms = -pre_samples / fs * 1000.0;
    Ok(ExplainResult {
        tau,
        max_diff: (high.mean[idx] - low.mean[idx]).abs(),
        high,
        low,
        fs,
        start_ms,
        max_diff_index: idx,
        max_diff_ms: start_ms + idx as f64 / fs * 1000.0,
    })
}

/// Everything the end-to-end run produces, in memory.
pub struct Study {
    pub partitioned: Partitioned,
    pub weights: ModelWeights,
    pub history: Vec<EpochRecord>,
    pub scored: BTreeMap<Partition, Vec<(PairRow, ScoredPair)>>,
    pub tallies: BTreeMap<Partition, ScoreTally>,
    pub reports: Vec<EvalReport>,
}

pub fn run_study(cfg: &RunConfig, sites: &Sites, exec: Execution) -> Result<Study, PipelineError> {
    let cutoff = cfg.cutoff().map_err(|e| PipelineError::Other(e.to_string()))?;
    let internal = assemble_site(&sites.internal, cfg.pairing.window_minutes, &cfg.preprocess, exec);
    let external = sites
        .external
        .as_ref()
        .map(|d| assemble_site(d, cfg.pairing.window_minutes, &cfg.preprocess, exec));
    let partitioned = partition_sites(&internal, external.as_ref(), cutoff, cfg.ratios(), cfg.split.seed)?;
    let (weights, history) = train_stage(&partitioned.rows, sites, cfg, exec)?;
    let scorer = LogisticClipScorer {
        peaks: cfg.peaks,
        features: cfg.features,
        ..LogisticClipScorer::new(weights.clone())
    };
    let mut scored = BTreeMap::new();
    let mut tallies = BTreeMap::new();
    let mut reports = Vec::new();
    for part in EVAL_SETS {
        let rows = rows_in(&partitioned.rows, part);
        if rows.is_empty() {
            continue;
        }
        let (s, t) = score_rows(&rows, sites, &scorer, &cfg.preprocess, exec);
        let pairs: Vec<ScoredPair> = s.iter().map(|(_, p)| p.clone()).collect();
        for &ep in &cfg.eval.endpoints {
            match evaluate_endpoint(part.slug(), &pairs, weights.frozen_threshold, ep, &cfg.eval.bootstrap, exec) {
                Ok(mut r) => {
                    r.config_hash = cfg.hash();
                    reports.push(r);
                }
                Err(e) => log::warn!("{} / {}: {e}", part.slug(), ep.as_str()),
            }
        }
        scored.insert(part, s);
        tallies.insert(part, t);
    }
    Ok(Study {
        partitioned,
        weights,
        history,
        scored,
        tallies,
        reports,
    })
}
