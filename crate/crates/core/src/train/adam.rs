use crate::model::ParamVector;

/// First/second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update with per-entry learning rates, followed by
/// projection onto the parameter bounds.
pub fn adam_step(state: &mut AdamState, params: &mut ParamVector, grads: &[f64], lr: &[f64]) {
    assert_eq!(grads.len(), params.len(), "gradient length");
    assert_eq!(lr.len(), params.len(), "learning-rate length");
    assert_eq!(state.m.len(), params.len(), "optimizer state length");
    state.t += 1;
    let c1 = 1.0 - state.beta1.powi(state.t as i32);
    let c2 = 1.0 - state.beta2.powi(state.t as i32);
    for i in 0..grads.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params.values[i] -= lr[i] * m_hat / (v_hat.sqrt() + state.eps);
    }
    params.project();
}
