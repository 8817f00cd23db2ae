//! Operating threshold frozen on the model-selection set.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Maximize Youden's J; τ is the midpoint of the winning score gap.
    #[default]
    YoudenMidpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInfo {
    pub policy: ThresholdPolicy,
    pub tau: f64,
    pub youden_j: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// No cut separates the classes at all (J = 0).
    pub degenerate: bool,
}

/// Predicted positive iff `score >= tau`. Ties in J go to the higher
/// sensitivity (lower τ).
pub fn freeze_threshold(scores: &[f64], labels: &[bool]) -> Result<ThresholdInfo, ModelError> {
    if scores.len() != labels.len() {
        return Err(ModelError::Dimension {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ModelError::SingleClass("threshold selection"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ModelError::NonFiniteFeature {
            name: format!("score[{i}]"),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk cuts from "everything positive" upwards; each distinct score ends
    // a group that flips to negative once τ passes it.
    let (mut tp, mut fp) = (n_pos, n_neg);
    let j_of = |tp: usize, fp: usize| {
        let sens = tp as f64 / n_pos as f64;
        let spec = (n_neg - fp) as f64 / n_neg as f64;
        (sens + spec - 1.0, sens, spec)
    };
    let (j0, s0, p0) = j_of(tp, fp);
    let mut best = (j0, s0, p0, scores[order[0]]);
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        while i < order.len() && scores[order[i]] == v {
            if labels[order[i]] {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        let tau = if i < order.len() {
            0.5 * (v + scores[order[i]])
        } else if v < 1.0 {
            0.5 * (v + 1.0)
        } else {
            f64::INFINITY
        };
        let (j, sens, spec) = j_of(tp, fp);
        if j > best.0 + 1e-12 {
            best = (j, sens, spec, tau);
        }
    }
    Ok(ThresholdInfo {
        policy: ThresholdPolicy::YoudenMidpoint,
        tau: best.3,
        youden_j: best.0,
        sensitivity: best.1,
        specificity: best.2,
        degenerate: best.0 <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_midpoint() {
        let t = freeze_threshold(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert!((t.tau - 0.5).abs() < 1e-12);
        assert_eq!(t.youden_j, 1.0);
        assert!(!t.degenerate);
    }

    #[test]
    fn identical_scores_degenerate() {
        let t = freeze_threshold(&[0.4; 4], &[false, true, false, true]).unwrap();
        assert_eq!(t.tau, 0.4);
        assert!(t.degenerate);
        assert_eq!(t.sensitivity, 1.0);
    }

    #[test]
    fn tie_prefers_sensitivity() {
        // Cuts at 0.25 (sens 1, spec .5) and 0.75 (sens .5, spec 1) tie on J.
        let t = freeze_threshold(&[0.1, 0.4, 0.6, 0.9], &[false, true, false, true]).unwrap();
        assert_eq!(t.sensitivity, 1.0);
        assert!((t.tau - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_error() {
        assert!(freeze_threshold(&[0.1, 0.2], &[true, true]).is_err());
    }
}
