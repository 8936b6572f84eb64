//! Adam optimizer over flat f64 parameter vectors.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("parameter/gradient/state length mismatch: params {params}, grads {grads}, state {state}")]
    LengthMismatch {
        params: usize,
        grads: usize,
        state: usize,
    },
    #[error("non-finite gradient at index {index} (value {value}) on step {step}")]
    NonFiniteGradient { index: usize, value: f64, step: u64 },
}

/// Bias-corrected Adam state. `v` entries stay non-negative; `step` advances
/// by exactly one per update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub fn new(param_count: usize, learning_rate: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
        }
    }

    /// One bias-corrected Adam update applied in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(OptimError::LengthMismatch {
                params: params.len(),
                grads: grads.len(),
                state: self.m.len(),
            });
        }
        for (i, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(OptimError::NonFiniteGradient {
                    index: i,
                    value: *g,
                    step: self.step,
                });
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
