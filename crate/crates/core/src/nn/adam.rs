//! Adam optimizer with bias-corrected moments.

use serde::{Deserialize, Serialize};

use super::params::ModelParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m: ModelParams,
    v: ModelParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }
}

/// One Adam update, in place: moments advance, then
/// theta -= lr * m_hat / (sqrt(v_hat) + eps).
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, lr: f64) {
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - ADAM_BETA1.powf(t);
    let bc2 = 1.0 - ADAM_BETA2.powf(t);

    let g_tensors = grads.tensors();
    let mut m_tensors = state.m.tensors_mut();
    let mut v_tensors = state.v.tensors_mut();
    for (idx, (_, theta)) in params.tensors_mut().into_iter().enumerate() {
        let g = g_tensors[idx].1;
        let m = &mut m_tensors[idx].1;
        let v = &mut v_tensors[idx].1;
        for k in 0..theta.len() {
            m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g[k];
            v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g[k] * g[k];
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            theta[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}
