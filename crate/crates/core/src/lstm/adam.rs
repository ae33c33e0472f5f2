//! Adam with bias correction:
//!
//! ```text
//! m <- b1 m + (1 - b1) g
//! v <- b2 v + (1 - b2) g^2
//! p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
//! ```

use super::network::LstmParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment estimates shaped like the parameters, plus the step
/// counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub m: LstmParams,
    pub v: LstmParams,
}

impl AdamState {
    pub fn new(like: &LstmParams) -> Self {
        let zeros = LstmParams::zeros(like.input_size(), like.hidden_size(), like.output_size());
        Self { step: 0, m: zeros.clone(), v: zeros }
    }
}

/// Elementwise Adam update over flat slices; `step` is the 1-based count of
/// the update being applied.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    cfg: &AdamConfig,
) {
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

pub fn adam_step(params: &mut LstmParams, grads: &LstmParams, state: &mut AdamState, cfg: &AdamConfig) {
    state.step += 1;
    let step = state.step;
    for (((p, g), m), v) in params
        .slices_mut()
        .into_iter()
        .zip(grads.slices())
        .zip(state.m.slices_mut())
        .zip(state.v.slices_mut())
    {
        adam_update(p, g, m, v, step, cfg);
    }
}
