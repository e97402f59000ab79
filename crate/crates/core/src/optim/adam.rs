use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::gae::{Gradients, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First-order update rule for the smooth part of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Plain gradient descent; the prox then has uniform weights.
    Sgd,
}

/// Adam moments for every parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

fn update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &AdamConfig,
    lr: f64,
    bias1: f64,
    bias2: f64,
    mut scale_out: Option<&mut [f64]>,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bias1;
        let denom = (v[i] / bias2).sqrt() + cfg.eps;
        params[i] -= lr * m_hat / denom;
        if let Some(out) = scale_out.as_deref_mut() {
            out[i] = denom;
        }
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn slice_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

impl Adam {
    pub fn new(params: &ModelParams, config: AdamConfig) -> Self {
        Adam {
            config,
            m: ModelParams::zeros_like(params),
            v: ModelParams::zeros_like(params),
            t: 0,
        }
    }

    /// Applies one step and returns the per-coordinate metric of `w0`,
    /// `sqrt(v̂) + ε`, which weights the subsequent proximal step.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, lr: f64) -> Array2<f64> {
        self.t += 1;
        let cfg = self.config;
        let bias1 = 1.0 - cfg.beta1.powi(self.t);
        let bias2 = 1.0 - cfg.beta2.powi(self.t);
        let mut metric = Array2::zeros(params.w0.raw_dim());
        update(
            slice_mut(&mut params.w0),
            slice(&grads.w0),
            slice_mut(&mut self.m.w0),
            slice_mut(&mut self.v.w0),
            &cfg,
            lr,
            bias1,
            bias2,
            Some(slice_mut(&mut metric)),
        );
        update(
            slice_mut(&mut params.w1),
            slice(&grads.w1),
            slice_mut(&mut self.m.w1),
            slice_mut(&mut self.v.w1),
            &cfg,
            lr,
            bias1,
            bias2,
            None,
        );
        update(
            slice_mut(&mut params.mixture.beta_logits),
            slice(&grads.mixture.beta_logits),
            slice_mut(&mut self.m.mixture.beta_logits),
            slice_mut(&mut self.v.mixture.beta_logits),
            &cfg,
            lr,
            bias1,
            bias2,
            None,
        );
        update(
            params.mixture.gamma_logits.as_slice_mut().unwrap(),
            grads.mixture.gamma_logits.as_slice().unwrap(),
            self.m.mixture.gamma_logits.as_slice_mut().unwrap(),
            self.v.mixture.gamma_logits.as_slice_mut().unwrap(),
            &cfg,
            lr,
            bias1,
            bias2,
            None,
        );
        metric
    }
}

/// Gradient descent step; the prox metric is the identity.
pub fn sgd_step(params: &mut ModelParams, grads: &Gradients, lr: f64) -> Array2<f64> {
    params.w0.scaled_add(-lr, &grads.w0);
    params.w1.scaled_add(-lr, &grads.w1);
    params
        .mixture
        .beta_logits
        .scaled_add(-lr, &grads.mixture.beta_logits);
    params
        .mixture
        .gamma_logits
        .scaled_add(-lr, &grads.mixture.gamma_logits);
    Array2::ones(params.w0.raw_dim())
}
