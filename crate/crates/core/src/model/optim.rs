//! Binary cross-entropy on logits and the Adam update.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Logits are clamped to this magnitude before the loss and the sigmoid.
pub const LOGIT_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam step. Rejects non-finite gradients without
/// touching `params` or `state`.
pub fn adam_step(
    params: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<(), ModelError> {
    if grad.len() != params.len() || state.m.len() != params.len() {
        return Err(ModelError::Dimension {
            expected: params.len(),
            got: grad.len(),
        });
    }
    if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
        return Err(ModelError::NonFiniteGradient { index });
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `params` holds the coefficients followed by the intercept.
pub fn logit(params: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let z = params[..d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + params[d];
    z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
}

/// Mean BCE and its gradient w.r.t. `[coefficients..., intercept]`.
pub fn bce_loss_and_gradient(
    params: &[f64],
    rows: &[Vec<f64>],
    labels: &[bool],
) -> Result<(f64, Vec<f64>), ModelError> {
    if rows.is_empty() {
        return Err(ModelError::Empty("training"));
    }
    if labels.len() != rows.len() {
        return Err(ModelError::Dimension {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let d = params.len() - 1;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        if x.len() != d {
            return Err(ModelError::Dimension {
                expected: d,
                got: x.len(),
            });
        }
        let z = logit(params, x);
        let yf = if y { 1.0 } else { 0.0 };
        loss += softplus(z) - yf * z;
        let r = sigmoid(z) - yf;
        for j in 0..d {
            grad[j] += r * x[j];
        }
        grad[d] += r;
    }
    let n = rows.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}
