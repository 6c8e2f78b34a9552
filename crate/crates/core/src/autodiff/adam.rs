use std::collections::BTreeMap;

use super::{Gradients, ParamSet};

/// Adam moments and hyperparameters for one group of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self {
            m: BTreeMap::new(),
            v: BTreeMap::new(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Clears moments and the step counter, keeping hyperparameters.
    pub fn reset(&mut self) {
        self.m.clear();
        self.v.clear();
        self.step = 0;
    }

    pub fn is_reset(&self) -> bool {
        self.step == 0 && self.m.values().chain(self.v.values()).all(|x| x.iter().all(|v| *v == 0.0))
    }
}

/// One bias-corrected Adam update of every parameter named in `grads`.
pub fn adam_step(params: &mut ParamSet, grads: &Gradients, state: &mut AdamState) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (name, g) in grads {
        let p = params
            .get_mut(name)
            .unwrap_or_else(|| panic!("gradient for unknown parameter {name}"));
        let m = state.m.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
        let v = state.v.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
        for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = state.beta1 * *mi + (1.0 - state.beta1) * gi;
            *vi = state.beta2 * *vi + (1.0 - state.beta2) * gi * gi;
            let mhat = *mi / bc1;
            let vhat = *vi / bc2;
            *w -= state.lr * mhat / (vhat.sqrt() + state.eps);
        }
    }
}
