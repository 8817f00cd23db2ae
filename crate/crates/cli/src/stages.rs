//! One function per subcommand. Every stage reads its inputs from the data
//! and run directories, so stages can be rerun independently.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use pocketk::config::RunConfig;
use pocketk::device::{read_recording, run_handheld_with};
use pocketk::eval::{
    compare_reference_negative, evaluate_endpoint, roc_points, EvalReport, MetricRow, ScoredPair,
};
use pocketk::ingest::baseline::{baseline_table, BaselineRow};
use pocketk::ingest::dataset::Dataset;
use pocketk::ingest::records::DemographicsRow;
use pocketk::ingest::{ComorbidityProfile, EcgPotassiumPair, PairRow, Partition, SiteStard};
use pocketk::longitudinal::{select_exemplars, track_all, write_trajectory_csv, TimedScore};
use pocketk::model::{train::write_history_csv, LogisticClipScorer, ModelWeights};
use pocketk::par::Execution;
use pocketk::pipeline::{
    assemble_site, explain as explain_groups, partition_sites, rows_in, score_rows, timed_scores,
    train_stage, RecordingIssue, ScoreTally, SiteAssembly, Sites, EVAL_SETS, EXTERNAL_SITE,
    INTERNAL_SITE,
};
use pocketk::provenance::Provenance;
use pocketk::synthdata::{generate_cohort, MANIFEST_FILE};
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as art, need, read_csv, read_json, write_csv, write_json, ScoreRow, WaveformRow};

pub struct Ctx {
    pub cfg: RunConfig,
    pub prov: Provenance,
    pub exec: Execution,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        Self {
            prov: cfg.provenance(),
            cfg,
            exec: Execution::default(),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn need(&self, name: &str, producer: &str) -> Result<PathBuf> {
        need(&self.cfg.out_dir, name, producer)
    }

    fn site_dir(&self, site: &str) -> PathBuf {
        self.cfg.data_dir.join(site)
    }

    fn sites(&self) -> Result<Sites> {
        let dir = self.site_dir(INTERNAL_SITE);
        need(&dir, MANIFEST_FILE, "synth")?;
        let internal = Dataset::load_dir(INTERNAL_SITE, &dir)?;
        let ext_dir = self.site_dir(EXTERNAL_SITE);
        let external = if ext_dir.join(MANIFEST_FILE).exists() {
            Some(Dataset::load_dir(EXTERNAL_SITE, &ext_dir)?)
        } else {
            log::info!("no external cohort under {}", ext_dir.display());
            None
        };
        Ok(Sites { internal, external })
    }

    fn split_rows(&self) -> Result<Vec<PairRow>> {
        read_csv(&self.need(art::SPLIT, "split")?)
    }

    fn weights(&self) -> Result<ModelWeights> {
        Ok(ModelWeights::load(&self.need(art::WEIGHTS, "train")?)?)
    }

    fn scorer(&self, weights: ModelWeights) -> LogisticClipScorer {
        LogisticClipScorer {
            peaks: self.cfg.peaks,
            features: self.cfg.features,
            ..LogisticClipScorer::new(weights)
        }
    }

    /// Scores of every evaluation set that `eval` produced.
    fn eval_scores(&self) -> Result<Vec<ScoreRow>> {
        self.need(&art::scores_file(Partition::InternalTest.slug()), "eval")?;
        let mut out = Vec::new();
        for part in EVAL_SETS {
            let p = self.out(&art::scores_file(part.slug()));
            if p.exists() {
                out.extend(read_csv::<ScoreRow>(&p)?);
            }
        }
        Ok(out)
    }
}

pub fn synth(ctx: &Ctx, skip_external: bool) -> Result<()> {
    let mut cohorts = vec![(INTERNAL_SITE, &ctx.cfg.synth.internal)];
    if !skip_external {
        cohorts.push((EXTERNAL_SITE, &ctx.cfg.synth.external));
    }
    for (site, cfg) in cohorts {
        let dir = ctx.site_dir(site);
        let m = generate_cohort(cfg, &dir)?;
        log::info!(
            "{site}: {} patients, {} recordings, {} labs -> {}",
            m.n_patients,
            m.n_recordings,
            m.n_labs,
            dir.display()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PairingStard {
    window_minutes: f64,
    sites: Vec<SiteStard>,
    quality_failed: BTreeMap<String, RecordingIssue>,
}

pub fn pair(ctx: &Ctx) -> Result<()> {
    let sites = ctx.sites()?;
    let window = ctx.cfg.pairing.window_minutes;
    let mut rows = Vec::new();
    let mut stard = PairingStard {
        window_minutes: window,
        sites: Vec::new(),
        quality_failed: BTreeMap::new(),
    };
    for ds in std::iter::once(&sites.internal).chain(sites.external.as_ref()) {
        let a = assemble_site(ds, window, &ctx.cfg.preprocess, ctx.exec);
        log::info!(
            "{}: {} pairs from {} patients",
            a.site,
            a.pairs.len(),
            a.stard.retained_patients
        );
        rows.extend(a.pairs.iter().map(|p| PairRow::from_pair(p, None, &a.site)));
        stard.sites.push(a.stard);
        stard.quality_failed.extend(a.quality_failed);
    }
    write_csv(&ctx.out(art::PAIRS), &ctx.prov, &rows)?;
    write_json(&ctx.out(art::PAIRING_STARD), &ctx.prov, &stard)
}

pub fn split(ctx: &Ctx) -> Result<()> {
    let pairs: Vec<PairRow> = read_csv(&ctx.need(art::PAIRS, "pair")?)?;
    let stard: PairingStard = read_json(&ctx.need(art::PAIRING_STARD, "pair")?)?;
    let assembly = |site: &str| -> Result<Option<SiteAssembly>> {
        let Some(s) = stard.sites.iter().find(|s| s.site == site) else {
            return Ok(None);
        };
        let pairs = pairs
            .iter()
            .filter(|r| r.site == site)
            .map(PairRow::to_pair)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(SiteAssembly {
            site: site.to_string(),
            pairs,
            stard: s.clone(),
            quality_failed: BTreeMap::new(),
        }))
    };
    let internal = assembly(INTERNAL_SITE)?.ok_or_else(|| anyhow!("{} has no internal site", art::PAIRING_STARD))?;
    let external = assembly(EXTERNAL_SITE)?;
    let cutoff = ctx.cfg.cutoff()?;
    let part = partition_sites(&internal, external.as_ref(), cutoff, ctx.cfg.ratios(), ctx.cfg.split.seed)?;
    if !part.stard.reconciles {
        log::error!("STARD counts do not reconcile; see {}", art::STARD);
    }
    for p in Partition::ALL {
        let rows = rows_in(&part.rows, p);
        log::info!("{}: {} pairs", p.slug(), rows.len());
    }
    write_csv(&ctx.out(art::SPLIT), &ctx.prov, &part.rows)?;
    write_json(&ctx.out(art::STARD), &ctx.prov, &part.stard)?;

    let sites = ctx.sites()?;
    let kept: Vec<PairRow> = part
        .rows
        .iter()
        .filter(|r| r.partition() != Some(Partition::Excluded))
        .cloned()
        .collect();
    let profiles = sites.phenotypes(&kept, &ctx.cfg.keywords);
    write_csv(&ctx.out(art::PHENOTYPES), &ctx.prov, &profiles.values().collect::<Vec<_>>())?;

    let mut demographics: BTreeMap<String, DemographicsRow> = sites.internal.demographics_map();
    if let Some(ext) = &sites.external {
        demographics.extend(ext.demographics_map());
    }
    let owned: Vec<(String, Vec<EcgPotassiumPair>)> = Partition::ALL
        .into_iter()
        .filter(|p| *p != Partition::Excluded)
        .map(|p| {
            let pairs = rows_in(&part.rows, p)
                .into_iter()
                .map(PairRow::to_pair)
                .collect::<Result<Vec<_>, _>>()?;
            Ok((p.slug().to_string(), pairs))
        })
        .collect::<Result<_>>()?;
    let borrowed: Vec<(String, Vec<&EcgPotassiumPair>)> = owned
        .iter()
        .map(|(n, ps)| (n.clone(), ps.iter().collect()))
        .collect();
    let table = baseline_table(&borrowed, &demographics, &profiles);
    write_csv(&ctx.out(art::BASELINE), &ctx.prov, &table.rows)
}

pub fn train(ctx: &Ctx) -> Result<()> {
    let rows = ctx.split_rows()?;
    let sites = ctx.sites()?;
    let (w, history) = train_stage(&rows, &sites, &ctx.cfg, ctx.exec)?;
    log::info!(
        "best epoch {} of {}: selection AUROC {:.4}, tau {:.4}",
        w.training.best_epoch,
        w.training.epochs_run,
        w.training.best_selection_auroc,
        w.frozen_threshold
    );
    let path = ctx.out(art::WEIGHTS);
    fs::create_dir_all(path.parent().expect("weights path has a parent"))?;
    w.save(&path)?;
    write_history_csv(&ctx.out(art::HISTORY), &history, Some(&ctx.prov))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RocRow {
    fpr: f64,
    tpr: f64,
    threshold: f64,
}

pub fn eval(ctx: &Ctx) -> Result<()> {
    let rows = ctx.split_rows()?;
    let weights = ctx.weights()?;
    let tau = weights.frozen_threshold;
    let sites = ctx.sites()?;
    let scorer = ctx.scorer(weights);
    let mut metrics: Vec<MetricRow> = Vec::new();
    let mut tallies: BTreeMap<String, ScoreTally> = BTreeMap::new();
    for part in EVAL_SETS {
        let set_rows = rows_in(&rows, part);
        if set_rows.is_empty() {
            log::warn!("{}: no pairs, skipped", part.slug());
            continue;
        }
        let (scored, tally) = score_rows(&set_rows, &sites, &scorer, &ctx.cfg.preprocess, ctx.exec);
        let score_rows: Vec<ScoreRow> = scored
            .iter()
            .map(|(r, s)| ScoreRow {
                record_id: r.record_id.clone(),
                patient_id: r.patient_id.clone(),
                site: r.site.clone(),
                partition: r.partition.clone(),
                ecg_timestamp: r.ecg_timestamp.clone(),
                potassium_mmol_l: r.potassium_mmol_l,
                label_primary: r.label_primary,
                label_severe: r.label_severe,
                score: s.score,
            })
            .collect();
        write_csv(&ctx.out(&art::scores_file(part.slug())), &ctx.prov, &score_rows)?;
        tallies.insert(part.slug().to_string(), tally);
        let pairs: Vec<ScoredPair> = scored.into_iter().map(|(_, p)| p).collect();
        for &ep in &ctx.cfg.eval.endpoints {
            let mut report = match evaluate_endpoint(part.slug(), &pairs, tau, ep, &ctx.cfg.eval.bootstrap, ctx.exec) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("{} / {}: {e}", part.slug(), ep.as_str());
                    continue;
                }
            };
            report.config_hash = ctx.cfg.hash();
            log::info!(
                "{} / {}: n={} AUROC {:.4} [{:.4}, {:.4}]",
                part.slug(),
                ep.as_str(),
                report.n_pairs,
                report.auroc.point,
                report.auroc.lower,
                report.auroc.upper
            );
            write_json(&ctx.out(&art::report_file(part.slug(), ep.as_str())), &ctx.prov, &report)?;
            let scores: Vec<f64> = pairs.iter().map(|p| p.score).collect();
            let labels: Vec<bool> = pairs.iter().map(|p| ep.label(p)).collect();
            let roc: Vec<RocRow> = roc_points(&scores, &labels)
                .into_iter()
                .map(|p| RocRow {
                    fpr: p.fpr,
                    tpr: p.tpr,
                    threshold: p.threshold,
                })
                .collect();
            write_csv(&ctx.out(&art::roc_file(part.slug(), ep.as_str())), &ctx.prov, &roc)?;
            metrics.extend(report.metric_rows());
        }
    }
    write_csv(&ctx.out(art::METRICS), &ctx.prov, &metrics)?;
    write_json(&ctx.out(art::SCORING), &ctx.prov, &tallies)
}

fn scored_pair(r: &ScoreRow) -> ScoredPair {
    ScoredPair::new(&r.record_id, &r.patient_id, r.score, r.potassium_mmol_l)
}

#[derive(Debug, Serialize, Deserialize)]
struct ExplainSummary {
    tau: f64,
    sets: Vec<String>,
    fs: f64,
    high_risk_beats: usize,
    low_risk_beats: usize,
    max_diff_ms_from_r: f64,
    max_diff: f64,
}

pub fn explain(ctx: &Ctx) -> Result<()> {
    let rows = ctx.split_rows()?;
    let tau = ctx.weights()?.frozen_threshold;
    let scores = ctx.eval_scores()?;
    let sites = ctx.sites()?;
    let by_id: BTreeMap<String, f64> = scores.iter().map(|s| (s.record_id.clone(), s.score)).collect();
    let scored_rows: Vec<&PairRow> = rows.iter().filter(|r| by_id.contains_key(&r.record_id)).collect();
    let x = explain_groups(&scored_rows, &by_id, tau, &sites, &ctx.cfg.preprocess, &ctx.cfg.peaks, ctx.exec)?;
    let wave: Vec<WaveformRow> = (0..x.high.mean.len())
        .map(|i| WaveformRow {
            time_ms: x.start_ms + i as f64 / x.fs * 1000.0,
            high_risk_mean: x.high.mean[i],
            high_risk_sd: x.high.sd[i],
            low_risk_mean: x.low.mean[i],
            low_risk_sd: x.low.sd[i],
        })
        .collect();
    write_csv(&ctx.out(art::WAVEFORMS), &ctx.prov, &wave)?;
    let sets: BTreeSet<String> = scores.iter().map(|s| s.partition.clone()).collect();
    let summary = ExplainSummary {
        tau,
        sets: sets.into_iter().collect(),
        fs: x.fs,
        high_risk_beats: x.high.n_beats,
        low_risk_beats: x.low.n_beats,
        max_diff_ms_from_r: x.max_diff_ms,
        max_diff: x.max_diff,
    };
    log::info!(
        "largest group difference {:.3} at {:+.0} ms from R ({} vs {} beats)",
        x.max_diff,
        x.max_diff_ms,
        x.high.n_beats,
        x.low.n_beats
    );
    write_json(&ctx.out(art::EXPLAIN), &ctx.prov, &summary)?;

    let profiles: BTreeMap<String, ComorbidityProfile> = read_csv::<ComorbidityProfile>(&ctx.need(art::PHENOTYPES, "split")?)?
        .into_iter()
        .map(|p| (p.patient_id.clone(), p))
        .collect();
    // The external set when there is one; otherwise every evaluation set.
    let ext = Partition::ExternalValidation.as_str();
    let pool: Vec<&ScoreRow> = if scores.iter().any(|s| s.partition == ext) {
        scores.iter().filter(|s| s.partition == ext).collect()
    } else {
        scores.iter().collect()
    };
    let pairs: Vec<ScoredPair> = pool.into_iter().map(scored_pair).collect();
    match compare_reference_negative(&pairs, tau, &profiles) {
        Ok(table) => {
            write_csv(&ctx.out(art::REFERENCE_NEGATIVE_CSV), &ctx.prov, &table.rows)?;
            write_json(&ctx.out(art::REFERENCE_NEGATIVE), &ctx.prov, &table)
        }
        Err(e) => {
            log::warn!("reference-negative comparison not available: {e}");
            write_csv::<pocketk::eval::ReferenceNegativeRow>(&ctx.out(art::REFERENCE_NEGATIVE_CSV), &ctx.prov, &[])?;
            write_json(
                &ctx.out(art::REFERENCE_NEGATIVE),
                &ctx.prov,
                &serde_json::json!({ "tau": tau, "not_available": e.to_string() }),
            )
        }
    }
}

#[derive(Debug, Serialize)]
struct ExemplarEntry {
    pattern: String,
    patient_id: Option<String>,
    partition: Option<String>,
    file: Option<String>,
}

/// Scores every retained pair of patients with at least two pairs. Risk
/// trajectories are descriptive, so development partitions are included;
/// each exemplar records the partition its patient belongs to.
pub fn track(ctx: &Ctx, extra: &[String]) -> Result<()> {
    let rows = ctx.split_rows()?;
    let weights = ctx.weights()?;
    let sites = ctx.sites()?;
    let mut per_patient: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.partition() != Some(Partition::Excluded)) {
        *per_patient.entry(&r.patient_id).or_default() += 1;
    }
    let chosen: Vec<&PairRow> = rows
        .iter()
        .filter(|r| r.partition() != Some(Partition::Excluded) && per_patient[r.patient_id.as_str()] >= 2)
        .collect();
    let (scored, _) = score_rows(&chosen, &sites, &ctx.scorer(weights), &ctx.cfg.preprocess, ctx.exec);
    let timed: Vec<TimedScore> = timed_scores(&scored);
    let (trajectories, notices) = track_all(&timed);
    for n in &notices {
        log::debug!("{n:?}");
    }
    let index = select_exemplars(&trajectories);
    let partition_of: BTreeMap<&str, &str> = rows.iter().map(|r| (r.patient_id.as_str(), r.partition.as_str())).collect();
    let mut wanted: BTreeSet<String> = extra.iter().cloned().collect();
    let mut entries = Vec::new();
    for (pattern, pid) in &index.exemplars {
        let file = pid.as_ref().map(|p| art::trajectory_file(p));
        entries.push(ExemplarEntry {
            pattern: serde_json::to_value(pattern)?.as_str().unwrap_or_default().to_string(),
            patient_id: pid.clone(),
            partition: pid.as_ref().and_then(|p| partition_of.get(p.as_str()).map(|s| s.to_string())),
            file,
        });
        if let Some(p) = pid {
            wanted.insert(p.clone());
        }
    }
    for pid in &wanted {
        let Some(t) = trajectories.iter().find(|t| &t.patient_id == pid) else {
            log::warn!("{pid}: no trajectory (fewer than two scored pairs)");
            continue;
        };
        let path = ctx.out(&art::trajectory_file(pid));
        fs::create_dir_all(path.parent().expect("trajectory path has a parent"))?;
        write_trajectory_csv(&path, t, Some(&ctx.prov))?;
    }
    log::info!(
        "{} trajectories; exemplars for {} of {} patterns",
        trajectories.len(),
        entries.iter().filter(|e| e.patient_id.is_some()).count(),
        entries.len()
    );
    write_json(
        &ctx.out(art::EXEMPLARS),
        &ctx.prov,
        &serde_json::json!({ "n_trajectories": index.n_trajectories, "exemplars": entries }),
    )
}

/// Prints the device result as JSON; the exit code follows the device
/// error class.
pub fn device(ctx: &Ctx, recording: &Path, weights: Option<&Path>) -> Result<u8> {
    let w = match weights {
        Some(p) => ModelWeights::load(p)?,
        None => ctx.weights()?,
    };
    let tau = w.frozen_threshold;
    let scorer = ctx.scorer(w);
    let result = read_recording(recording).and_then(|rec| run_handheld_with(&rec, &scorer, tau, &ctx.cfg.preprocess));
    match result {
        Ok(r) => {
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", recording.display());
            Ok(e.exit_code() as u8)
        }
    }
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            if rel != art::REPORT {
                out.push(rel);
            }
        }
    }
    Ok(())
}

pub fn report(ctx: &Ctx) -> Result<()> {
    let stard: serde_json::Value = read_json(&ctx.need(art::STARD, "split")?)?;
    let baseline: Vec<BaselineRow> = read_csv(&ctx.need(art::BASELINE, "split")?)?;
    ctx.need(art::METRICS, "eval")?;
    let mut evaluations: Vec<EvalReport> = Vec::new();
    for part in EVAL_SETS {
        for ep in &ctx.cfg.eval.endpoints {
            let p = ctx.out(&art::report_file(part.slug(), ep.as_str()));
            if p.exists() {
                evaluations.push(read_json(&p)?);
            }
        }
    }
    let explain: serde_json::Value = read_json(&ctx.need(art::EXPLAIN, "explain")?)?;
    ctx.need(art::WAVEFORMS, "explain")?;
    let reference: serde_json::Value = read_json(&ctx.need(art::REFERENCE_NEGATIVE, "explain")?)?;
    let exemplars: serde_json::Value = read_json(&ctx.need(art::EXEMPLARS, "track")?)?;
    let weights = ctx.weights()?;
    let mut artifacts = Vec::new();
    list_files(&ctx.cfg.out_dir, &ctx.cfg.out_dir, &mut artifacts)
        .with_context(|| format!("listing {}", ctx.cfg.out_dir.display()))?;
    let strip = |mut v: serde_json::Value| {
        if let Some(m) = v.as_object_mut() {
            m.remove("provenance");
        }
        v
    };
    let report = serde_json::json!({
        "stard": strip(stard),
        "baseline": baseline,
        "model": {
            "feature_names": weights.feature_names,
            "frozen_threshold": weights.frozen_threshold,
            "threshold": weights.threshold,
            "training": weights.training,
        },
        "evaluations": evaluations,
        "explain": strip(explain),
        "reference_negative": strip(reference),
        "trajectories": strip(exemplars),
        "artifacts": artifacts,
    });
    write_json(&ctx.out(art::REPORT), &ctx.prov, &report)?;
    log::info!("wrote {}", ctx.out(art::REPORT).display());
    Ok(())
}
