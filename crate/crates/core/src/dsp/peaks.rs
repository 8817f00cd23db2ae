//! R-peak detection: derivative, squaring and moving-window integration
//! with an adaptive signal/noise threshold, a refractory period and
//! search-back for missed beats.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakDetectorConfig {
    pub integration_window_s: f64,
    pub refractory_s: f64,
    /// Half-width of the window in which an envelope peak is refined to R.
    pub refine_s: f64,
    pub pre_r_s: f64,
    pub post_r_s: f64,
}

impl Default for PeakDetectorConfig {
    fn default() -> Self {
        Self {
            integration_window_s: 0.15,
            refractory_s: 0.2,
            refine_s: 0.08,
            pre_r_s: 0.3,
            post_r_s: 0.5,
        }
    }
}

/// Detected R peaks and the fixed beat window around each.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSet {
    pub r_peaks: Vec<usize>,
    pub fs: f64,
    pub pre: usize,
    pub post: usize,
    pub n_samples: usize,
}

impl BeatSet {
    pub fn is_empty(&self) -> bool {
        self.r_peaks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.r_peaks.len()
    }

    pub fn window_len(&self) -> usize {
        self.pre + self.post
    }

    /// R indices whose full window `[r - pre, r + post)` lies inside the clip.
    pub fn complete(&self) -> impl Iterator<Item = usize> + '_ {
        self.r_peaks
            .iter()
            .copied()
            .filter(|&r| r >= self.pre && r + self.post <= self.n_samples)
    }

    /// Median RR interval in seconds, if at least two peaks exist.
    pub fn median_rr_s(&self) -> Option<f64> {
        if self.r_peaks.len() < 2 {
            return None;
        }
        let mut rr: Vec<f64> = self
            .r_peaks
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / self.fs)
            .collect();
        rr.sort_by(f64::total_cmp);
        let m = rr.len() / 2;
        Some(if rr.len() % 2 == 1 { rr[m] } else { 0.5 * (rr[m - 1] + rr[m]) })
    }
}

fn envelope(x: &[f64], fs: f64, window_s: f64) -> Vec<f64> {
    let n = x.len();
    let mut sq = vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        let d = 0.5 * (x[i + 1] - x[i - 1]);
        sq[i] = d * d;
    }
    let w = ((window_s * fs).round() as usize).max(1);
    let half = w / 2;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + sq[i];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn local_maxima(e: &[f64]) -> Vec<usize> {
    (1..e.len().saturating_sub(1))
        .filter(|&i| e[i] > 0.0 && e[i] >= e[i - 1] && e[i] > e[i + 1])
        .collect()
}

fn refine(x: &[f64], center: usize, half: usize) -> usize {
    let lo = center.saturating_sub(half);
    let hi = (center + half + 1).min(x.len());
    (lo..hi)
        .max_by(|&a, &b| x[a].total_cmp(&x[b]).then(b.cmp(&a)))
        .unwrap_or(center)
}

pub fn detect_r_peaks(clip: &[f64], fs: f64) -> BeatSet {
    detect_r_peaks_with(clip, fs, &PeakDetectorConfig::default())
}

pub fn detect_r_peaks_with(clip: &[f64], fs: f64, cfg: &PeakDetectorConfig) -> BeatSet {
    let mut set = BeatSet {
        r_peaks: Vec::new(),
        fs,
        pre: (cfg.pre_r_s * fs).round() as usize,
        post: (cfg.post_r_s * fs).round() as usize,
        n_samples: clip.len(),
    };
    if clip.len() < 3 {
        return set;
    }
    let e = envelope(clip, fs, cfg.integration_window_s);
    let cands = local_maxima(&e);
    if cands.is_empty() {
        return set;
    }
    let refractory = (cfg.refractory_s * fs).round() as usize;
    let refine_half = (cfg.refine_s * fs).round() as usize;
    let learn = ((2.0 * fs) as usize).min(e.len());
    let mut spk = 0.25 * e[..learn].iter().cloned().fold(0.0, f64::max);
    let mut npk = 0.5 * e[..learn].iter().sum::<f64>() / learn as f64;
    // (refined R index, envelope value)
    let mut beats: Vec<(usize, f64)> = Vec::new();

    let accept = |beats: &mut Vec<(usize, f64)>, r: usize, v: f64| -> bool {
        if let Some(&(last, lv)) = beats.last() {
            if r <= last {
                return false;
            }
            if r - last < refractory {
                if v > lv {
                    beats.pop();
                    beats.push((r, v));
                    return true;
                }
                return false;
            }
        }
        beats.push((r, v));
        true
    };

    for (ci, &c) in cands.iter().enumerate() {
        let threshold = npk + 0.25 * (spk - npk);
        let v = e[c];
        if v > threshold {
            let r = refine(clip, c, refine_half);
            if accept(&mut beats, r, v) {
                spk = 0.125 * v + 0.875 * spk;
            }
            // Search back when the gap since the previous beat is unusually long.
            if beats.len() >= 3 {
                let n = beats.len();
                let mean_rr = (beats[n - 2].0 - beats[0].0) as f64 / (n - 2) as f64;
                let (prev, cur) = (beats[n - 2].0, beats[n - 1].0);
                if (cur - prev) as f64 > 1.66 * mean_rr {
                    let lo = prev + refractory;
                    let hi = cur.saturating_sub(refractory);
                    let missed = cands[..ci]
                        .iter()
                        .copied()
                        .filter(|&m| m > lo && m < hi && e[m] > 0.5 * threshold)
                        .max_by(|&a, &b| e[a].total_cmp(&e[b]));
                    if let Some(m) = missed {
                        let r = refine(clip, m, refine_half);
                        if r > prev + refractory && r + refractory < cur {
                            beats.insert(n - 1, (r, e[m]));
                            spk = 0.25 * e[m] + 0.75 * spk;
                        }
                    }
                }
            }
        } else {
            npk = 0.125 * v + 0.875 * npk;
        }
    }
    set.r_peaks = beats.into_iter().map(|(r, _)| r).collect();
    set
}
