//! Adam with L2 weight decay folded into the gradient.

use crate::model::{GradientTape, SimpaModel};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

#[derive(Clone, Debug, Default)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &SimpaModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

pub fn adam_step(model: &mut SimpaModel, grad: &GradientTape, lr: f64, weight_decay: f64, state: &mut AdamState) {
    if state.m.is_empty() {
        *state = AdamState::new(model);
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let grads = grad.tensors();
    for (((w, g), m), v) in model.tensors_mut().into_iter().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        for i in 0..w.len() {
            let gi = g[i] + weight_decay * w[i];
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
            w[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
        }
    }
}
