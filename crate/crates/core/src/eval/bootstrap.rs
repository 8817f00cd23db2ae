//! Percentile bootstrap with patients as the sampling unit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 2000,
            seed: 20240501,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub valid_resamples: usize,
    pub skipped_resamples: usize,
    /// Fewer than two clusters: the interval collapses to the point.
    pub degenerate: bool,
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pair indices of one resample: draw `clusters.len()` clusters with
/// replacement and keep all of their members.
pub fn resample_indices(clusters: &[Vec<usize>], seed: u64, b: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64 + 1);
    let n = clusters.len();
    let mut out = Vec::new();
    for _ in 0..n {
        out.extend_from_slice(&clusters[rng.random_range(0..n)]);
    }
    out
}

/// Bootstraps several metrics at once over the same resamples.
/// `metric(indices)` returns one value per metric, `None` where undefined.
/// The interval is widened to contain the point estimate if needed.
pub fn clustered_bootstrap<F>(
    clusters: &[Vec<usize>],
    names: &[&str],
    metric: F,
    cfg: &BootstrapConfig,
    exec: Execution,
) -> Result<Vec<Interval>, EvalError>
where
    F: Fn(&[usize]) -> Vec<Option<f64>> + Sync + Send,
{
    clustered_bootstrap_each(clusters, names, metric, cfg, exec)
        .into_iter()
        .collect()
}

/// As [`clustered_bootstrap`], with a separate outcome per metric.
pub fn clustered_bootstrap_each<F>(
    clusters: &[Vec<usize>],
    names: &[&str],
    metric: F,
    cfg: &BootstrapConfig,
    exec: Execution,
) -> Vec<Result<Interval, EvalError>>
where
    F: Fn(&[usize]) -> Vec<Option<f64>> + Sync + Send,
{
    let all: Vec<usize> = clusters.iter().flatten().copied().collect();
    let points = metric(&all);
    let mut out = Vec::with_capacity(names.len());
    if clusters.len() < 2 || cfg.resamples == 0 {
        for (name, p) in names.iter().zip(&points) {
            out.push(p.ok_or_else(|| EvalError::Undefined(name.to_string())).map(|p| Interval {
                point: p,
                lower: p,
                upper: p,
                valid_resamples: 0,
                skipped_resamples: 0,
                degenerate: true,
            }));
        }
        return out;
    }
    let draws: Vec<Vec<Option<f64>>> = exec.map_range(cfg.resamples, |b| {
        metric(&resample_indices(clusters, cfg.seed, b))
    });
    for (k, name) in names.iter().enumerate() {
        let Some(point) = points[k] else {
            out.push(Err(EvalError::Undefined(name.to_string())));
            continue;
        };
        let mut vals: Vec<f64> = draws.iter().filter_map(|d| d[k]).collect();
        let skipped = cfg.resamples - vals.len();
        if 2 * skipped > cfg.resamples {
            out.push(Err(EvalError::MostlyUndefined {
                metric: name.to_string(),
                skipped,
                total: cfg.resamples,
            }));
            continue;
        }
        vals.sort_by(f64::total_cmp);
        out.push(Ok(Interval {
            point,
            lower: percentile(&vals, 0.025).min(point),
            upper: percentile(&vals, 0.975).max(point),
            valid_resamples: vals.len(),
            skipped_resamples: skipped,
            degenerate: false,
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auroc;

    fn toy() -> (Vec<f64>, Vec<bool>, Vec<Vec<usize>>) {
        let scores: Vec<f64> = (0..40).map(|i| ((i * 37) % 40) as f64 / 40.0).collect();
        let labels: Vec<bool> = scores.iter().enumerate().map(|(i, s)| *s > 0.5 || i % 7 == 0).collect();
        let clusters = (0..20).map(|p| vec![2 * p, 2 * p + 1]).collect();
        (scores, labels, clusters)
    }

    fn auroc_fn<'a>(s: &'a [f64], l: &'a [bool]) -> impl Fn(&[usize]) -> Vec<Option<f64>> + Sync + Send + 'a {
        move |idx: &[usize]| {
            let ss: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
            let ll: Vec<bool> = idx.iter().map(|&i| l[i]).collect();
            vec![auroc(&ss, &ll)]
        }
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert!((percentile(&v, 0.025) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_brackets() {
        let (s, l, c) = toy();
        let cfg = BootstrapConfig { resamples: 500, seed: 3 };
        let a = clustered_bootstrap(&c, &["auroc"], auroc_fn(&s, &l), &cfg, Execution::Parallel).unwrap();
        let b = clustered_bootstrap(&c, &["auroc"], auroc_fn(&s, &l), &cfg, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a[0].lower <= a[0].point && a[0].point <= a[0].upper);
        assert!(a[0].lower < a[0].upper);
    }

    #[test]
    fn single_patient_degenerate() {
        let s = vec![0.2, 0.9];
        let l = vec![false, true];
        let r = clustered_bootstrap(&[vec![0, 1]], &["auroc"], auroc_fn(&s, &l), &BootstrapConfig::default(), Execution::Sequential).unwrap();
        assert!(r[0].degenerate);
        assert_eq!((r[0].lower, r[0].upper), (1.0, 1.0));
    }

    #[test]
    fn mostly_undefined_is_error() {
        // Defined on the full sample, and in resamples only when patient 0
        // is drawn at least twice (~26% of them).
        let c: Vec<Vec<usize>> = (0..30).map(|i| vec![i]).collect();
        let metric = |idx: &[usize]| {
            let full = idx.windows(2).all(|w| w[1] == w[0] + 1);
            vec![(full || idx.iter().filter(|&&i| i == 0).count() >= 2).then_some(1.0)]
        };
        let e = clustered_bootstrap(&c, &["m"], metric, &BootstrapConfig { resamples: 400, seed: 1 }, Execution::Sequential);
        assert!(matches!(e, Err(EvalError::MostlyUndefined { .. })), "{e:?}");
    }

    #[test]
    fn patients_are_the_unit() {
        // Duplicating a patient's pairs keeps which clusters each resample draws.
        let c1: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![2, 3]];
        let c2: Vec<Vec<usize>> = vec![vec![0, 4], vec![1], vec![2, 3]];
        for b in 0..50 {
            let r1 = resample_indices(&c1, 9, b);
            let r2 = resample_indices(&c2, 9, b);
            let strip = |r: Vec<usize>| r.into_iter().filter(|&i| i != 4).collect::<Vec<_>>();
            assert_eq!(strip(r2.clone()), r1);
            assert_eq!(r2.iter().filter(|&&i| i == 4).count(), r1.iter().filter(|&&i| i == 0).count());
        }
    }
}
