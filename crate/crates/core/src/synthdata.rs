//! Deterministic synthetic lead-I cohorts.
//!
//! A beat is a sum of five Gaussians (P, Q, R, S, T). Serum potassium acts
//! on the template through [`PotassiumMorphologyMap`]: T waves peak above
//! 5.0 mmol/L, the QRS widens above 6.0 and P waves flatten above 6.5.
//! Every patient is generated from its own RNG stream, so cohorts are
//! byte-identical for a given seed regardless of thread count.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};
use thiserror::Error;

use crate::ingest::records::{
    format_timestamp, DemographicsRow, DiagnosisRow, LabRow, ManifestRow, Timestamp,
};
use crate::par::Execution;
use crate::provenance::{self, Provenance};
use crate::wire::{self, Waveform, WireError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// One Gaussian deflection: amplitude (mV), width (s) and center (s, R at 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWave {
    pub amplitude_mv: f64,
    pub width_s: f64,
    pub center_s: f64,
}

impl GaussianWave {
    pub const fn new(amplitude_mv: f64, width_s: f64, center_s: f64) -> Self {
        Self {
            amplitude_mv,
            width_s,
            center_s,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let d = (t - self.center_s) / self.width_s;
        self.amplitude_mv * (-0.5 * d * d).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeatTemplate {
    pub p: GaussianWave,
    pub q: GaussianWave,
    pub r: GaussianWave,
    pub s: GaussianWave,
    pub t: GaussianWave,
    pub rr_interval_s: f64,
}

impl Default for BeatTemplate {
    /// Resting lead-I morphology at 60 bpm.
    fn default() -> Self {
        Self {
            p: GaussianWave::new(0.15, 0.025, -0.20),
            q: GaussianWave::new(-0.10, 0.010, -0.030),
            r: GaussianWave::new(1.20, 0.012, 0.0),
            s: GaussianWave::new(-0.25, 0.010, 0.030),
            t: GaussianWave::new(0.30, 0.050, 0.28),
            rr_interval_s: 1.0,
        }
    }
}

impl BeatTemplate {
    pub fn waves(&self) -> [GaussianWave; 5] {
        [self.p, self.q, self.r, self.s, self.t]
    }

    /// Structural checks: positive widths, wave ordering, positive RR.
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, w) in ["P", "Q", "R", "S", "T"].iter().zip(self.waves()) {
            if !(w.width_s > 0.0 && w.width_s.is_finite()) {
                return Err(SynthError::Parameter(format!(
                    "{name} width must be positive, got {}",
                    w.width_s
                )));
            }
            if !w.amplitude_mv.is_finite() || !w.center_s.is_finite() {
                return Err(SynthError::Parameter(format!("{name} wave is not finite")));
            }
        }
        let c = [
            self.p.center_s,
            self.q.center_s,
            self.r.center_s,
            self.s.center_s,
            self.t.center_s,
        ];
        if !(c[0] < c[1] && c[1] < 0.0 && c[2] == 0.0 && 0.0 < c[3] && c[3] < c[4]) {
            return Err(SynthError::Parameter(format!(
                "wave centers must satisfy P < Q < 0 = R < S < T, got {c:?}"
            )));
        }
        if !(self.rr_interval_s > 0.0) {
            return Err(SynthError::Parameter("rr_interval_s must be positive".into()));
        }
        Ok(())
    }

    /// Baseline dominance: R is the largest deflection.
    pub fn r_dominant(&self) -> bool {
        self.r.amplitude_mv > 0.0
            && self
                .waves()
                .iter()
                .all(|w| self.r.amplitude_mv >= w.amplitude_mv.abs())
    }

    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        self.p.eval(t) + self.q.eval(t) + self.r.eval(t) + self.s.eval(t) + self.t.eval(t)
    }

    /// Sample offset of R (t = 0) within [`generate_beat`] output.
    pub fn r_offset_samples(&self, fs: f64) -> usize {
        (self.rr_interval_s * fs / 3.0).round() as usize
    }
}

/// One RR interval of the clean beat, sampled at `fs`.
///
/// The grid is `t_k = (k - k0) / fs` with `k0 = round(rr·fs/3)`, so R lands
/// exactly on sample `k0`.
pub fn generate_beat(template: &BeatTemplate, fs: f64) -> Result<Vec<f64>, SynthError> {
    if !(fs >= 100.0 && fs.is_finite()) {
        return Err(SynthError::Parameter(format!(
            "sampling rate must be >= 100 Hz, got {fs}"
        )));
    }
    template.validate()?;
    let n = (template.rr_interval_s * fs).round() as usize;
    let k0 = template.r_offset_samples(fs) as f64;
    Ok((0..n)
        .map(|k| template.value_at((k as f64 - k0) / fs))
        .collect())
}

/// Piecewise-linear dependence of beat morphology on serum potassium.
///
/// All gains are relative (fraction of the baseline value per mmol/L above
/// the respective onset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotassiumMorphologyMap {
    pub onset_k: f64,
    pub t_amp_gain: f64,
    pub t_width_shrink: f64,
    pub qrs_widen_onset_k: f64,
    pub qrs_width_gain: f64,
    pub p_atten_onset_k: f64,
    pub p_attenuation: f64,
}

impl Default for PotassiumMorphologyMap {
    fn default() -> Self {
        Self {
            onset_k: 5.0,
            t_amp_gain: 1.0,
            t_width_shrink: 0.10,
            qrs_widen_onset_k: 6.0,
            qrs_width_gain: 0.20,
            p_atten_onset_k: 6.5,
            p_attenuation: 0.35,
        }
    }
}

impl PotassiumMorphologyMap {
    pub fn validate(&self) -> Result<(), SynthError> {
        let gains = [
            self.t_amp_gain,
            self.t_width_shrink,
            self.qrs_width_gain,
            self.p_attenuation,
        ];
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(SynthError::Parameter("morphology gains must be >= 0".into()));
        }
        Ok(())
    }
}

pub const K_MIN: f64 = 2.0;
pub const K_MAX: f64 = 9.0;

pub fn apply_potassium(
    template: &BeatTemplate,
    map: &PotassiumMorphologyMap,
    k: f64,
) -> Result<BeatTemplate, SynthError> {
    if !(K_MIN..=K_MAX).contains(&k) {
        return Err(SynthError::Parameter(format!(
            "potassium {k} outside physiologic range [{K_MIN}, {K_MAX}]"
        )));
    }
    map.validate()?;
    let mut out = *template;
    let t_excess = (k - map.onset_k).max(0.0);
    if t_excess > 0.0 {
        out.t.amplitude_mv *= 1.0 + map.t_amp_gain * t_excess;
        out.t.width_s /= 1.0 + map.t_width_shrink * t_excess;
    }
    let qrs_excess = (k - map.qrs_widen_onset_k).max(0.0);
    if qrs_excess > 0.0 {
        let f = 1.0 + map.qrs_width_gain * qrs_excess;
        for w in [&mut out.q, &mut out.r, &mut out.s] {
            w.width_s *= f;
            w.center_s *= f;
        }
    }
    let p_excess = (k - map.p_atten_onset_k).max(0.0);
    if p_excess > 0.0 {
        out.p.amplitude_mv *= (1.0 - map.p_attenuation * p_excess).max(0.0);
    }
    Ok(out)
}

/// Additive artifact amplitudes, all in millivolts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// 0.2 Hz sinusoid.
    pub baseline_wander_mv: f64,
    /// 50 Hz sinusoid.
    pub powerline_mv: f64,
    /// Gaussian white noise SD.
    pub white_mv: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            baseline_wander_mv: 0.15,
            powerline_mv: 0.05,
            white_mv: 0.01,
        }
    }
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        baseline_wander_mv: 0.0,
        powerline_mv: 0.0,
        white_mv: 0.0,
    };
}

pub const BASELINE_WANDER_HZ: f64 = 0.2;
pub const POWERLINE_HZ: f64 = 50.0;
pub const RR_JITTER: f64 = 0.05;

/// A generated beat train plus the ground-truth R times.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSignal {
    pub samples: Vec<f64>,
    pub r_times_s: Vec<f64>,
}

/// Clean beat train: beats at jittered RR intervals (±5% uniform).
pub fn beat_train<R: Rng + ?Sized>(
    template: &BeatTemplate,
    duration_s: f64,
    fs: f64,
    rng: &mut R,
) -> Result<SynthSignal, SynthError> {
    template.validate()?;
    if !(fs >= 100.0) || !(duration_s > 0.0) {
        return Err(SynthError::Parameter(format!(
            "need fs >= 100 and positive duration, got fs={fs} duration={duration_s}"
        )));
    }
    let n = (duration_s * fs).round() as usize;
    let rr = template.rr_interval_s;
    // One beat before t = 0 so the first samples carry a T-wave tail.
    let mut t = rng.random_range(0.25..0.25 + rr) - rr;
    let mut r_times = Vec::new();
    while t < duration_s + rr {
        r_times.push(t);
        t += rr * (1.0 + rng.random_range(-RR_JITTER..RR_JITTER));
    }
    let mut samples = vec![0.0; n];
    let reach_before = (-template.p.center_s + 4.0 * template.p.width_s).max(0.5);
    let reach_after = template.t.center_s + 4.0 * template.t.width_s;
    for &tr in &r_times {
        let lo = (((tr - reach_before) * fs).floor().max(0.0)) as usize;
        let hi = (((tr + reach_after) * fs).ceil().max(0.0) as usize).min(n);
        for (k, s) in samples.iter_mut().enumerate().take(hi).skip(lo) {
            *s += template.value_at(k as f64 / fs - tr);
        }
    }
    let r_times_s = r_times
        .into_iter()
        .filter(|&t| (0.0..duration_s).contains(&t))
        .collect();
    Ok(SynthSignal { samples, r_times_s })
}

/// Adds baseline wander, powerline hum and white noise in place.
pub fn add_noise<R: Rng + ?Sized>(samples: &mut [f64], fs: f64, noise: &NoiseConfig, rng: &mut R) {
    let phase_bw = rng.random_range(0.0..std::f64::consts::TAU);
    let phase_pl = rng.random_range(0.0..std::f64::consts::TAU);
    let white = Normal::new(0.0, 1.0).unwrap();
    for (k, s) in samples.iter_mut().enumerate() {
        let t = k as f64 / fs;
        let w: f64 = white.sample(rng);
        *s += noise.baseline_wander_mv * (std::f64::consts::TAU * BASELINE_WANDER_HZ * t + phase_bw).sin()
            + noise.powerline_mv * (std::f64::consts::TAU * POWERLINE_HZ * t + phase_pl).sin()
            + noise.white_mv * w;
    }
}

/// Serum potassium draw: truncated normal mixed with a uniform elevated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotassiumDistribution {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    /// Probability that a draw comes from the elevated tail.
    pub tail_weight: f64,
    pub tail_low: f64,
    pub tail_high: f64,
}

impl Default for PotassiumDistribution {
    fn default() -> Self {
        Self {
            mean: 4.14,
            sd: 0.36,
            lower: 2.5,
            upper: 9.0,
            tail_weight: 0.03,
            tail_low: 5.0,
            tail_high: 7.5,
        }
    }
}

impl PotassiumDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, mean_shift: f64, tail_mult: f64) -> f64 {
        let w = (self.tail_weight * tail_mult).min(1.0);
        if rng.random::<f64>() < w {
            return rng.random_range(self.tail_low..self.tail_high);
        }
        let normal = Normal::new(self.mean + mean_shift, self.sd).unwrap();
        loop {
            let k: f64 = normal.sample(rng);
            if (self.lower..=self.upper).contains(&k) {
                return k;
            }
        }
    }

    /// P(K > `threshold`) under the given shift and tail multiplier.
    fn exceedance(&self, threshold: f64, mean_shift: f64, tail_mult: f64) -> f64 {
        let w = (self.tail_weight * tail_mult).min(1.0);
        let tail = ((self.tail_high - threshold) / (self.tail_high - self.tail_low)).clamp(0.0, 1.0);
        let n = StatNormal::new(self.mean + mean_shift, self.sd).unwrap();
        let mass = n.cdf(self.upper) - n.cdf(self.lower);
        let above = (n.cdf(self.upper) - n.cdf(threshold.clamp(self.lower, self.upper))) / mass;
        w * tail + (1.0 - w) * above
    }
}

/// Comorbidity prevalence and its coupling to potassium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComorbidityConfig {
    pub p_ckd: f64,
    pub p_heart_failure: f64,
    pub p_hypertension: f64,
    pub p_diabetes: f64,
    pub p_coronary_artery_disease: f64,
    pub p_stroke: f64,
    /// Shift of the normal-component mean for CKD patients (mmol/L).
    pub ckd_k_shift: f64,
    pub ckd_tail_multiplier: f64,
    pub hf_k_shift: f64,
    pub hf_tail_multiplier: f64,
    /// Relative T-amplitude increase carried by CKD patients at any K
    /// (a cardiorenal ECG phenotype independent of the potassium map).
    pub ckd_t_amp_gain: f64,
    /// Fraction of comorbidity diagnoses recorded after the patient's first ECG.
    pub post_index_fraction: f64,
    /// Probability that a patient carries a non-chronic renal distractor
    /// diagnosis ("renal insufficiency", "acute kidney injury").
    pub distractor_fraction: f64,
}

impl Default for ComorbidityConfig {
    fn default() -> Self {
        Self {
            p_ckd: 0.12,
            p_heart_failure: 0.08,
            p_hypertension: 0.35,
            p_diabetes: 0.20,
            p_coronary_artery_disease: 0.15,
            p_stroke: 0.06,
            ckd_k_shift: 0.5,
            ckd_tail_multiplier: 3.0,
            hf_k_shift: 0.2,
            hf_tail_multiplier: 1.5,
            ckd_t_amp_gain: 0.25,
            post_index_fraction: 0.1,
            distractor_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemographicsConfig {
    pub age_mean: f64,
    pub age_sd: f64,
    pub age_min: f64,
    pub age_max: f64,
    pub female_fraction: f64,
}

impl Default for DemographicsConfig {
    fn default() -> Self {
        Self {
            age_mean: 60.0,
            age_sd: 15.0,
            age_min: 18.0,
            age_max: 95.0,
            female_fraction: 0.45,
        }
    }
}

/// Rates of records injected to exercise the exclusion paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionConfig {
    /// Patients screened (present in demographics) without any ECG.
    pub no_ecg_patient_fraction: f64,
    /// Patients whose labs all fall outside the pairing window.
    pub unpairable_patient_fraction: f64,
    /// Patients whose recordings are all saturated.
    pub poor_quality_patient_fraction: f64,
    /// Probability that a paired ECG also has a closer hemolysed lab.
    pub hemolysed_lab_fraction: f64,
    /// Probability that a recording has an extra lab days away.
    pub stray_lab_fraction: f64,
    /// Patients per longitudinal pattern (rise, recovery, fluctuation, decline).
    pub trajectory_patients_per_pattern: usize,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            no_ecg_patient_fraction: 0.05,
            unpairable_patient_fraction: 0.05,
            poor_quality_patient_fraction: 0.01,
            hemolysed_lab_fraction: 0.05,
            stray_lab_fraction: 0.10,
            trajectory_patients_per_pattern: 1,
        }
    }
}

/// Per-patient template variability (relative half-ranges, uniform).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateVariation {
    pub amplitude_jitter: f64,
    /// R is the normalizing deflection, so it varies less between patients.
    pub r_amplitude_jitter: f64,
    pub width_jitter: f64,
    pub t_center_jitter_s: f64,
}

impl Default for TemplateVariation {
    fn default() -> Self {
        Self {
            amplitude_jitter: 0.15,
            r_amplitude_jitter: 0.05,
            width_jitter: 0.10,
            t_center_jitter_s: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub pairs_per_patient: (usize, usize),
    pub potassium: PotassiumDistribution,
    pub heart_rate_bpm: (f64, f64),
    pub noise: NoiseConfig,
    pub duration_s: f64,
    pub fs_hz: u32,
    pub morphology: PotassiumMorphologyMap,
    pub variation: TemplateVariation,
    pub comorbidity: ComorbidityConfig,
    pub demographics: DemographicsConfig,
    pub injection: InjectionConfig,
    /// Study period; first ECGs are drawn uniformly inside it.
    pub period_start: String,
    pub period_end: String,
    pub patient_id_prefix: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 200,
            pairs_per_patient: (1, 3),
            potassium: PotassiumDistribution::default(),
            heart_rate_bpm: (55.0, 95.0),
            noise: NoiseConfig::default(),
            duration_s: 10.0,
            fs_hz: 500,
            morphology: PotassiumMorphologyMap::default(),
            variation: TemplateVariation::default(),
            comorbidity: ComorbidityConfig::default(),
            demographics: DemographicsConfig::default(),
            injection: InjectionConfig::default(),
            period_start: "2019-01-01T00:00:00Z".into(),
            period_end: "2023-12-31T00:00:00Z".into(),
            patient_id_prefix: "P".into(),
            seed: 20240501,
        }
    }
}

fn prob_ok(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.pairs_per_patient.0 < 1 || self.pairs_per_patient.0 > self.pairs_per_patient.1 {
            return bad("pairs_per_patient must be a range with min >= 1");
        }
        if self.fs_hz < 100 {
            return bad("fs_hz must be >= 100");
        }
        if !(self.duration_s >= 1.0) {
            return bad("duration_s must be >= 1");
        }
        let (lo, hi) = self.heart_rate_bpm;
        if !(30.0 <= lo && lo <= hi && hi <= 200.0) {
            return bad("heart_rate_bpm must lie within [30, 200]");
        }
        let k = &self.potassium;
        if !(k.sd > 0.0
            && K_MIN <= k.lower
            && k.lower < k.upper
            && k.upper <= K_MAX
            && K_MIN <= k.tail_low
            && k.tail_low < k.tail_high
            && k.tail_high <= K_MAX
            && prob_ok(k.tail_weight))
        {
            return bad("potassium distribution out of range");
        }
        let c = &self.comorbidity;
        let i = &self.injection;
        let probs = [
            c.p_ckd,
            c.p_heart_failure,
            c.p_hypertension,
            c.p_diabetes,
            c.p_coronary_artery_disease,
            c.p_stroke,
            c.post_index_fraction,
            c.distractor_fraction,
            self.demographics.female_fraction,
            i.no_ecg_patient_fraction,
            i.unpairable_patient_fraction,
            i.poor_quality_patient_fraction,
            i.hemolysed_lab_fraction,
            i.stray_lab_fraction,
        ];
        if probs.iter().any(|p| !prob_ok(*p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(c.ckd_t_amp_gain > -1.0) {
            return bad("ckd_t_amp_gain must be > -1");
        }
        if i.no_ecg_patient_fraction + i.unpairable_patient_fraction + i.poor_quality_patient_fraction > 1.0 {
            return bad("injected exclusion fractions sum above 1");
        }
        let (Some(start), Some(end)) = (self.start(), self.end()) else {
            return bad("period_start/period_end must be RFC3339");
        };
        if start >= end {
            return bad("period_start must precede period_end");
        }
        self.morphology.validate()?;
        Ok(())
    }

    fn start(&self) -> Option<Timestamp> {
        crate::ingest::records::parse_timestamp(&self.period_start)
    }

    fn end(&self) -> Option<Timestamp> {
        crate::ingest::records::parse_timestamp(&self.period_end)
    }

    /// Expected per-pair prevalence of K > `threshold` among mixture draws
    /// (injected trajectory patients excluded).
    pub fn expected_prevalence(&self, threshold: f64) -> f64 {
        let c = &self.comorbidity;
        let mut total = 0.0;
        for ckd in [false, true] {
            for hf in [false, true] {
                let p = if ckd { c.p_ckd } else { 1.0 - c.p_ckd }
                    * if hf { c.p_heart_failure } else { 1.0 - c.p_heart_failure };
                let (shift, mult) = k_modifiers(c, ckd, hf);
                total += p * self.potassium.exceedance(threshold, shift, mult);
            }
        }
        total
    }

    /// Solve for the tail weight giving the target prevalence of K > 5.5.
    pub fn with_target_prevalence(mut self, target: f64) -> Result<Self, SynthError> {
        let (mut lo, mut hi) = (0.0, 1.0);
        self.potassium.tail_weight = lo;
        let floor = self.expected_prevalence(5.5);
        self.potassium.tail_weight = hi;
        let ceil = self.expected_prevalence(5.5);
        if !(floor..=ceil).contains(&target) {
            return Err(SynthError::Config(format!(
                "target prevalence {target} outside attainable [{floor:.4}, {ceil:.4}]"
            )));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            self.potassium.tail_weight = mid;
            if self.expected_prevalence(5.5) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.potassium.tail_weight = 0.5 * (lo + hi);
        Ok(self)
    }

    pub fn config_hash(&self) -> String {
        provenance::hash_json(self)
    }
}

fn k_modifiers(c: &ComorbidityConfig, ckd: bool, hf: bool) -> (f64, f64) {
    let mut shift = 0.0;
    let mut mult = 1.0;
    if ckd {
        shift += c.ckd_k_shift;
        mult *= c.ckd_tail_multiplier;
    }
    if hf {
        shift += c.hf_k_shift;
        mult *= c.hf_tail_multiplier;
    }
    (shift, mult)
}

/// Longitudinal potassium patterns injected for trajectory analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryPattern {
    Rise,
    Recovery,
    Fluctuation,
    Decline,
}

impl TrajectoryPattern {
    pub const ALL: [TrajectoryPattern; 4] = [
        TrajectoryPattern::Rise,
        TrajectoryPattern::Recovery,
        TrajectoryPattern::Fluctuation,
        TrajectoryPattern::Decline,
    ];

    pub fn potassium_series(self) -> [f64; 6] {
        match self {
            TrajectoryPattern::Rise => [4.2, 4.7, 5.2, 5.8, 6.3, 6.8],
            TrajectoryPattern::Recovery => [4.3, 4.8, 6.5, 6.9, 5.0, 4.4],
            TrajectoryPattern::Fluctuation => [4.2, 5.9, 4.5, 6.1, 4.4, 5.8],
            TrajectoryPattern::Decline => [6.8, 6.3, 5.8, 5.2, 4.7, 4.2],
        }
    }
}

/// Why a patient was constructed the way it was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientKind {
    Regular,
    NoEcg,
    Unpairable,
    PoorQuality,
    Trajectory(TrajectoryPattern),
}

/// Generator-side facts about the cohort, written as `truth.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortTruth {
    pub no_ecg_patients: Vec<String>,
    pub unpairable_patients: Vec<String>,
    pub poor_quality_patients: Vec<String>,
    pub trajectories: BTreeMap<String, TrajectoryPattern>,
    pub ckd_patients: Vec<String>,
    pub heart_failure_patients: Vec<String>,
    /// Ground-truth R-peak times per record (seconds from recording start).
    pub r_times_s: BTreeMap<String, Vec<f64>>,
    /// Applied beat template per record.
    pub templates: BTreeMap<String, BeatTemplate>,
}

/// A generated recording held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecording {
    pub manifest: ManifestRow,
    pub waveform: Waveform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub config: SynthConfig,
    pub recordings: Vec<SynthRecording>,
    pub labs: Vec<LabRow>,
    pub diagnoses: Vec<DiagnosisRow>,
    pub demographics: Vec<DemographicsRow>,
    pub truth: CohortTruth,
}

impl Cohort {
    pub fn manifest(&self) -> Vec<ManifestRow> {
        self.recordings.iter().map(|r| r.manifest.clone()).collect()
    }

    pub fn waveforms(&self) -> BTreeMap<String, Waveform> {
        self.recordings
            .iter()
            .map(|r| (r.manifest.record_id.clone(), r.waveform.clone()))
            .collect()
    }
}

struct PatientBundle {
    recordings: Vec<SynthRecording>,
    labs: Vec<LabRow>,
    diagnoses: Vec<DiagnosisRow>,
    demographics: DemographicsRow,
    kind: PatientKind,
    ckd: bool,
    hf: bool,
    r_times: Vec<(String, Vec<f64>)>,
    templates: Vec<(String, BeatTemplate)>,
}

const CKD_TEXTS: &[&str] = &[
    "Chronic kidney disease stage 3",
    "Chronic renal insufficiency",
    "Chronic renal failure",
    "End-stage renal disease on maintenance hemodialysis",
    "CKD stage 4",
    "Uraemia",
];
const HF_TEXTS: &[&str] = &[
    "Congestive heart failure",
    "Heart failure with reduced ejection fraction (HFrEF)",
    "Chronic left heart failure",
    "HFpEF",
];
const DISTRACTOR_TEXTS: &[&str] = &["Renal insufficiency", "Acute kidney injury"];
const OTHER_TEXTS: [(&str, usize); 4] = [
    ("Essential hypertension", 0),
    ("Type 2 diabetes mellitus", 1),
    ("Coronary artery disease", 2),
    ("Cerebral infarction (stroke)", 3),
];

fn patient_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, x: f64, rel: f64) -> f64 {
    if rel == 0.0 {
        x
    } else {
        x * (1.0 + rng.random_range(-rel..=rel))
    }
}

fn patient_template<R: Rng + ?Sized>(rng: &mut R, v: &TemplateVariation) -> BeatTemplate {
    let mut t = BeatTemplate::default();
    for (i, w) in [&mut t.p, &mut t.q, &mut t.r, &mut t.s, &mut t.t].into_iter().enumerate() {
        let rel = if i == 2 { v.r_amplitude_jitter } else { v.amplitude_jitter };
        w.amplitude_mv = jitter(rng, w.amplitude_mv, rel);
        w.width_s = jitter(rng, w.width_s, v.width_jitter);
    }
    if v.t_center_jitter_s > 0.0 {
        t.t.center_s += rng.random_range(-v.t_center_jitter_s..=v.t_center_jitter_s);
    }
    t
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn synth_patient(cfg: &SynthConfig, index: usize, kind: PatientKind) -> Result<PatientBundle, SynthError> {
    let mut rng = patient_rng(cfg.seed, index);
    let pid = format!("{}{:06}", cfg.patient_id_prefix, index);
    let start = cfg.start().expect("validated");
    let end = cfg.end().expect("validated");
    let fs = cfg.fs_hz as f64;

    let c = &cfg.comorbidity;
    let ckd = rng.random::<f64>() < c.p_ckd;
    let hf = rng.random::<f64>() < c.p_heart_failure;
    let others: Vec<bool> = [
        c.p_hypertension,
        c.p_diabetes,
        c.p_coronary_artery_disease,
        c.p_stroke,
    ]
    .iter()
    .map(|p| rng.random::<f64>() < *p)
    .collect();
    let distractor = rng.random::<f64>() < c.distractor_fraction;

    let d = &cfg.demographics;
    let age = Normal::new(d.age_mean, d.age_sd)
        .unwrap()
        .sample(&mut rng)
        .clamp(d.age_min, d.age_max)
        .round();
    let sex = if rng.random::<f64>() < d.female_fraction { "F" } else { "M" };
    let demographics = DemographicsRow {
        patient_id: pid.clone(),
        age_years: age,
        sex: sex.to_string(),
    };

    let mut base = patient_template(&mut rng, &cfg.variation);
    if ckd {
        base.t.amplitude_mv *= 1.0 + c.ckd_t_amp_gain;
    }
    let potassium_series: Vec<f64> = match kind {
        PatientKind::Trajectory(p) => p.potassium_series().to_vec(),
        _ => {
            let n = rng.random_range(cfg.pairs_per_patient.0..=cfg.pairs_per_patient.1);
            let (shift, mult) = k_modifiers(c, ckd, hf);
            (0..n)
                .map(|_| (cfg.potassium.sample(&mut rng, shift, mult) * 100.0).round() / 100.0)
                .collect()
        }
    };

    let span = (end - start).num_seconds();
    let first = start + Duration::seconds(rng.random_range(0..span));
    let mut times = Vec::with_capacity(potassium_series.len());
    let mut t = first;
    for i in 0..potassium_series.len() {
        if i > 0 {
            let gap_days = if matches!(kind, PatientKind::Trajectory(_)) {
                rng.random_range(20..60)
            } else {
                rng.random_range(7..180)
            };
            t += Duration::seconds(gap_days * 86_400 + rng.random_range(0..86_400));
        }
        times.push(t);
    }

    let mut recordings = Vec::new();
    let mut labs = Vec::new();
    let mut r_times = Vec::new();
    let mut templates = Vec::new();
    let mut lab_seq = 0usize;
    let mut push_lab = |labs: &mut Vec<LabRow>, ts: Timestamp, k: f64, hemolysed: bool| {
        lab_seq += 1;
        labs.push(LabRow {
            lab_id: format!("{pid}-L{lab_seq:02}"),
            patient_id: pid.clone(),
            timestamp: format_timestamp(&ts),
            potassium_mmol_l: (k * 100.0).round() / 100.0,
            hemolysed: hemolysed as u8,
        });
    };

    for (j, (&k, &ts)) in potassium_series.iter().zip(&times).enumerate() {
        let record_id = format!("{pid}-E{:02}", j + 1);
        let bpm = rng.random_range(cfg.heart_rate_bpm.0..=cfg.heart_rate_bpm.1);
        let mut template = apply_potassium(&base, &cfg.morphology, k)?;
        template.rr_interval_s = 60.0 / bpm;
        let signal = beat_train(&template, cfg.duration_s, fs, &mut rng)?;
        let mut samples = signal.samples;
        add_noise(&mut samples, fs, &cfg.noise, &mut rng);
        if kind == PatientKind::PoorQuality {
            let rail = 0.05;
            for s in samples.iter_mut() {
                *s = s.clamp(-rail, rail);
            }
        }
        let waveform = Waveform {
            fs_hz: cfg.fs_hz,
            samples: samples.iter().map(|&s| s as f32).collect(),
        };

        if kind != PatientKind::NoEcg {
            recordings.push(SynthRecording {
                manifest: ManifestRow {
                    record_id: record_id.clone(),
                    patient_id: pid.clone(),
                    timestamp: format_timestamp(&ts),
                    fs_hz: cfg.fs_hz,
                    n_samples: waveform.samples.len() as u32,
                    file_path: format!("waveforms/{record_id}.pkecg"),
                    true_k: Some(k),
                },
                waveform,
            });
            r_times.push((record_id.clone(), signal.r_times_s));
            templates.push((record_id, template));
        }

        // Paired lab, |offset| uniform on [1 s, 60 min).
        let offset = if kind == PatientKind::Unpairable {
            let m = rng.random_range(61 * 60..=240 * 60);
            if rng.random::<bool>() { m } else { -m }
        } else {
            let m = rng.random_range(1..=3599);
            if rng.random::<bool>() { m } else { -m }
        };
        let lab_ts = ts + Duration::seconds(offset);
        push_lab(&mut labs, lab_ts, k, false);

        if kind != PatientKind::Unpairable && rng.random::<f64>() < cfg.injection.hemolysed_lab_fraction {
            let closer = ts + Duration::seconds(offset / 2);
            push_lab(&mut labs, closer, k + rng.random_range(0.5..1.5), true);
        }
        if rng.random::<f64>() < cfg.injection.stray_lab_fraction {
            let far = ts + Duration::seconds(rng.random_range(2..10) * 86_400);
            let stray_k = cfg.potassium.sample(&mut rng, 0.0, 1.0);
            push_lab(&mut labs, far, stray_k, false);
        }
    }

    let index_ts = times[0];
    let mut diagnoses = Vec::new();
    let mut diag = |rng: &mut ChaCha8Rng, text: &str| {
        let post = rng.random::<f64>() < c.post_index_fraction;
        let days = rng.random_range(1..720);
        let ts = if post {
            index_ts + Duration::days(days)
        } else {
            index_ts - Duration::days(days)
        };
        diagnoses.push(DiagnosisRow {
            patient_id: pid.clone(),
            timestamp: format_timestamp(&ts),
            diagnosis_text: text.to_string(),
        });
    };
    if ckd {
        let text = pick(&mut rng, CKD_TEXTS);
        diag(&mut rng, text);
    }
    if hf {
        let text = pick(&mut rng, HF_TEXTS);
        diag(&mut rng, text);
    }
    if distractor {
        let text = pick(&mut rng, DISTRACTOR_TEXTS);
        diag(&mut rng, text);
    }
    for (text, i) in OTHER_TEXTS {
        if others[i] {
            diag(&mut rng, text);
        }
    }

    Ok(PatientBundle {
        recordings,
        labs,
        diagnoses,
        demographics,
        kind,
        ckd,
        hf,
        r_times,
        templates,
    })
}

/// Assigns each patient index its construction kind.
fn patient_kinds(cfg: &SynthConfig) -> Vec<PatientKind> {
    let n = cfg.n_patients;
    let inj = &cfg.injection;
    let mut kinds = vec![PatientKind::Regular; n];
    // Kind assignment uses its own stream so it is independent of per-patient draws.
    let mut rng = patient_rng(cfg.seed, usize::MAX - 1);
    let mut free: Vec<usize> = (0..n).collect();
    let mut take = |count: usize, kind: PatientKind, kinds: &mut Vec<PatientKind>| {
        for _ in 0..count.min(free.len()) {
            let j = rng.random_range(0..free.len());
            kinds[free.swap_remove(j)] = kind;
        }
    };
    let count = |f: f64| (f * n as f64).round() as usize;
    for p in TrajectoryPattern::ALL {
        take(inj.trajectory_patients_per_pattern, PatientKind::Trajectory(p), &mut kinds);
    }
    take(count(inj.no_ecg_patient_fraction), PatientKind::NoEcg, &mut kinds);
    take(count(inj.unpairable_patient_fraction), PatientKind::Unpairable, &mut kinds);
    take(count(inj.poor_quality_patient_fraction), PatientKind::PoorQuality, &mut kinds);
    kinds
}

/// Generate a cohort in memory.
pub fn synthesize_cohort(cfg: &SynthConfig) -> Result<Cohort, SynthError> {
    synthesize_cohort_with(cfg, Execution::default())
}

pub fn synthesize_cohort_with(cfg: &SynthConfig, exec: Execution) -> Result<Cohort, SynthError> {
    cfg.validate()?;
    let kinds = patient_kinds(cfg);
    let bundles = exec.map_range(cfg.n_patients, |i| synth_patient(cfg, i, kinds[i]));
    let mut cohort = Cohort {
        config: cfg.clone(),
        recordings: Vec::new(),
        labs: Vec::new(),
        diagnoses: Vec::new(),
        demographics: Vec::new(),
        truth: CohortTruth::default(),
    };
    for b in bundles {
        let b = b?;
        let pid = b.demographics.patient_id.clone();
        match b.kind {
            PatientKind::NoEcg => cohort.truth.no_ecg_patients.push(pid.clone()),
            PatientKind::Unpairable => cohort.truth.unpairable_patients.push(pid.clone()),
            PatientKind::PoorQuality => cohort.truth.poor_quality_patients.push(pid.clone()),
            PatientKind::Trajectory(p) => {
                cohort.truth.trajectories.insert(pid.clone(), p);
            }
            PatientKind::Regular => {}
        }
        if b.ckd {
            cohort.truth.ckd_patients.push(pid.clone());
        }
        if b.hf {
            cohort.truth.heart_failure_patients.push(pid);
        }
        cohort.truth.r_times_s.extend(b.r_times);
        cohort.truth.templates.extend(b.templates);
        cohort.recordings.extend(b.recordings);
        cohort.labs.extend(b.labs);
        cohort.diagnoses.extend(b.diagnoses);
        cohort.demographics.push(b.demographics);
    }
    Ok(cohort)
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const LABS_FILE: &str = "labs.csv";
pub const DIAGNOSES_FILE: &str = "diagnoses.csv";
pub const DEMOGRAPHICS_FILE: &str = "demographics.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "synth_config.json";

/// Summary of a cohort written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub n_patients: usize,
    pub n_recordings: usize,
    pub n_labs: usize,
    pub n_diagnoses: usize,
    pub provenance: Provenance,
}

pub fn write_cohort(cohort: &Cohort, out_dir: &Path) -> Result<CohortManifest, SynthError> {
    fs::create_dir_all(out_dir.join("waveforms"))?;
    let prov = Provenance::new(cohort.config.config_hash(), &[("synth", cohort.config.seed)]);
    for r in &cohort.recordings {
        wire::write_file(&out_dir.join(&r.manifest.file_path), &r.waveform)?;
    }
    provenance::write_csv(&out_dir.join(MANIFEST_FILE), Some(&prov), &cohort.manifest())?;
    provenance::write_csv(&out_dir.join(LABS_FILE), Some(&prov), &cohort.labs)?;
    provenance::write_csv(&out_dir.join(DIAGNOSES_FILE), Some(&prov), &cohort.diagnoses)?;
    provenance::write_csv(&out_dir.join(DEMOGRAPHICS_FILE), Some(&prov), &cohort.demographics)?;
    let truth = serde_json::to_vec_pretty(&cohort.truth).expect("truth serializes");
    fs::write(out_dir.join(TRUTH_FILE), truth)?;
    let config = serde_json::to_vec_pretty(&cohort.config).expect("config serializes");
    fs::write(out_dir.join(CONFIG_FILE), config)?;
    Ok(CohortManifest {
        n_patients: cohort.demographics.len(),
        n_recordings: cohort.recordings.len(),
        n_labs: cohort.labs.len(),
        n_diagnoses: cohort.diagnoses.len(),
        provenance: prov,
    })
}

/// Generate a cohort and write it under `out_dir`.
pub fn generate_cohort(cfg: &SynthConfig, out_dir: &Path) -> Result<CohortManifest, SynthError> {
    let cohort = synthesize_cohort(cfg)?;
    write_cohort(&cohort, out_dir)
}

pub fn read_truth(dir: &Path) -> Result<CohortTruth, SynthError> {
    let bytes = fs::read(dir.join(TRUTH_FILE))?;
    serde_json::from_slice(&bytes).map_err(|e| SynthError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitudes_give_zero_beat() {
        let mut t = BeatTemplate::default();
        for w in [&mut t.p, &mut t.q, &mut t.r, &mut t.s, &mut t.t] {
            w.amplitude_mv = 0.0;
        }
        let beat = generate_beat(&t, 500.0).unwrap();
        assert_eq!(beat.len(), 500);
        assert!(beat.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_gaussian_peak_on_r_sample() {
        let mut t = BeatTemplate::default();
        for w in [&mut t.p, &mut t.q, &mut t.s, &mut t.t] {
            w.amplitude_mv = 0.0;
        }
        t.r = GaussianWave::new(1.0, 0.02, 0.0);
        let beat = generate_beat(&t, 500.0).unwrap();
        let (imax, max) = beat
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!((max - 1.0).abs() < 1e-6);
        assert_eq!(imax, t.r_offset_samples(500.0));
    }

    #[test]
    fn default_template_peak_within_r_width() {
        let t = BeatTemplate::default();
        assert!(t.r_dominant());
        let fs = 500.0;
        let beat = generate_beat(&t, fs).unwrap();
        let imax = beat
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let tmax = (imax as f64 - t.r_offset_samples(fs) as f64) / fs;
        assert!(tmax.abs() <= t.r.width_s, "peak at {tmax}");
    }

    #[test]
    fn beat_parameter_errors() {
        let mut t = BeatTemplate::default();
        assert!(generate_beat(&t, 50.0).is_err());
        t.t.width_s = 0.0;
        assert!(generate_beat(&t, 500.0).is_err());
        let mut t = BeatTemplate::default();
        t.s.center_s = -0.01;
        assert!(t.validate().is_err());
    }

    #[test]
    fn potassium_below_onset_is_identity() {
        let t = BeatTemplate::default();
        let m = PotassiumMorphologyMap::default();
        assert_eq!(apply_potassium(&t, &m, 4.2).unwrap(), t);
        assert_eq!(apply_potassium(&t, &m, 5.0).unwrap(), t);
        assert!(apply_potassium(&t, &m, 1.5).is_err());
        assert!(apply_potassium(&t, &m, 9.5).is_err());
    }

    #[test]
    fn potassium_peaks_t_and_widens_qrs() {
        let t = BeatTemplate::default();
        let m = PotassiumMorphologyMap::default();
        let a = apply_potassium(&t, &m, 5.6).unwrap();
        let b = apply_potassium(&t, &m, 6.0).unwrap();
        assert!(b.t.amplitude_mv / b.r.amplitude_mv > a.t.amplitude_mv / a.r.amplitude_mv);
        let c = apply_potassium(&t, &m, 7.0).unwrap();
        assert!(c.q.width_s > t.q.width_s);
        assert!(c.r.width_s > t.r.width_s);
        assert!(c.s.width_s > t.s.width_s);
        assert!(c.p.amplitude_mv < t.p.amplitude_mv);
        c.validate().unwrap();
    }

    fn measured_t_over_r_and_qrs(template: &BeatTemplate, fs: f64) -> (f64, f64) {
        let beat = generate_beat(template, fs).unwrap();
        let r0 = template.r_offset_samples(fs);
        let r_amp = beat[r0];
        let t_lo = r0 + (0.15 * fs) as usize;
        let t_amp = beat[t_lo..].iter().cloned().fold(f64::MIN, f64::max);
        // QRS extent: contiguous-ish span around R where |x| >= 5% of R.
        let thr = 0.05 * r_amp;
        let lo = (r0 - (0.12 * fs) as usize..=r0).find(|&i| beat[i].abs() >= thr).unwrap();
        let hi = (r0..=r0 + (0.12 * fs) as usize).rev().find(|&i| beat[i].abs() >= thr).unwrap();
        (t_amp / r_amp, (hi - lo) as f64 / fs)
    }

    #[test]
    fn morphology_is_monotone_over_k_grid() {
        let base = BeatTemplate::default();
        let m = PotassiumMorphologyMap::default();
        let fs = 1000.0;
        let mut prev = (f64::MIN, f64::MIN);
        for i in 0..=8 {
            let k = 4.0 + 0.5 * i as f64;
            let t = apply_potassium(&base, &m, k).unwrap();
            let (ratio, qrs) = measured_t_over_r_and_qrs(&t, fs);
            assert!(ratio >= prev.0 - 1e-12, "T/R fell at k={k}");
            assert!(qrs >= prev.1 - 1e-12, "QRS narrowed at k={k}");
            prev = (ratio, qrs);
        }
    }

    #[test]
    fn zero_noise_equals_clean_train() {
        let t = BeatTemplate::default();
        let mut rng_a = ChaCha8Rng::seed_from_u64(3);
        let clean = beat_train(&t, 10.0, 500.0, &mut rng_a).unwrap();
        let mut rng_b = ChaCha8Rng::seed_from_u64(3);
        let mut noisy = beat_train(&t, 10.0, 500.0, &mut rng_b).unwrap();
        add_noise(&mut noisy.samples, 500.0, &NoiseConfig::NONE, &mut rng_b);
        assert_eq!(clean, noisy);
    }

    #[test]
    fn beat_train_has_expected_beats() {
        let t = BeatTemplate::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = beat_train(&t, 10.0, 500.0, &mut rng).unwrap();
        assert_eq!(s.samples.len(), 5000);
        assert!((9..=11).contains(&s.r_times_s.len()));
        for w in s.r_times_s.windows(2) {
            let rr = w[1] - w[0];
            assert!((0.95..=1.05).contains(&rr));
        }
    }

    fn small_config() -> SynthConfig {
        SynthConfig {
            n_patients: 10,
            pairs_per_patient: (2, 2),
            injection: InjectionConfig {
                no_ecg_patient_fraction: 0.0,
                unpairable_patient_fraction: 0.0,
                poor_quality_patient_fraction: 0.0,
                trajectory_patients_per_pattern: 0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn count_conservation() {
        let cohort = synthesize_cohort(&small_config()).unwrap();
        assert_eq!(cohort.recordings.len(), 20);
        assert_eq!(cohort.demographics.len(), 10);
        assert!(cohort.recordings.iter().all(|r| r.manifest.true_k.is_some()));
    }

    #[test]
    fn sequential_and_parallel_cohorts_match() {
        let cfg = small_config();
        let a = synthesize_cohort_with(&cfg, Execution::Sequential).unwrap();
        let b = synthesize_cohort_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn written_files_are_byte_identical_across_runs() {
        let cfg = small_config();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_cohort(&cfg, d1.path()).unwrap();
        generate_cohort(&cfg, d2.path()).unwrap();
        let mut names: Vec<_> = walk(d1.path());
        names.sort();
        assert!(names.len() > 20);
        for rel in names {
            let a = fs::read(d1.path().join(&rel)).unwrap();
            let b = fs::read(d2.path().join(&rel)).unwrap();
            assert_eq!(a, b, "{rel} differs");
        }
    }

    fn walk(root: &Path) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for e in fs::read_dir(&dir).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push(p.strip_prefix(root).unwrap().display().to_string());
                }
            }
        }
        out
    }

    #[test]
    fn injected_kinds_are_counted() {
        let cfg = SynthConfig {
            n_patients: 100,
            ..Default::default()
        };
        let cohort = synthesize_cohort(&cfg).unwrap();
        assert_eq!(cohort.truth.no_ecg_patients.len(), 5);
        assert_eq!(cohort.truth.unpairable_patients.len(), 5);
        assert_eq!(cohort.truth.poor_quality_patients.len(), 1);
        assert_eq!(cohort.truth.trajectories.len(), 4);
        let no_ecg: std::collections::HashSet<_> = cohort.truth.no_ecg_patients.iter().collect();
        assert!(cohort
            .recordings
            .iter()
            .all(|r| !no_ecg.contains(&r.manifest.patient_id)));
    }

    #[test]
    fn prevalence_solver_hits_target() {
        let cfg = SynthConfig::default().with_target_prevalence(0.03).unwrap();
        assert!((cfg.expected_prevalence(5.5) - 0.03).abs() < 1e-9);
        assert!(SynthConfig::default().with_target_prevalence(1.5).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small_config();
        cfg.pairs_per_patient = (3, 2);
        assert!(synthesize_cohort(&cfg).is_err());
        let mut cfg = small_config();
        cfg.period_start = "nope".into();
        assert!(cfg.validate().is_err());
    }
}
