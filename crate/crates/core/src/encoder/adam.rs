use super::{Gradients, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per weight tensor plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step: u64,
}

impl AdamState {
    pub fn for_shapes(shapes: &[(usize, usize)]) -> Self {
        let zeros = || shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }
}

/// One Adam update with L2 weight decay added to the gradient.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, cfg: &AdamConfig) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::Diverged("non-finite gradient".into()));
    }
    let shapes_match = params
        .weights()
        .iter()
        .zip(grads.tensors())
        .all(|(w, g)| w.shape() == g.shape());
    if !shapes_match {
        return Err(Error::Shape("gradient shapes differ from parameters".into()));
    }
    let ModelParams {
        w0,
        w1,
        wp1,
        wp2,
        adam,
    } = params;
    adam.step += 1;
    let t = adam.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (k, (w, g)) in [w0, w1, wp1, wp2].into_iter().zip(grads.tensors()).enumerate() {
        let m = adam.m[k].as_mut_slice();
        let v = adam.v[k].as_mut_slice();
        for (((wi, &gi), mi), vi) in w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
            let gi = gi + cfg.weight_decay * *wi;
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let mhat = *mi / c1;
            let vhat = *vi / c2;
            *wi -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
    if !params.is_finite() {
        return Err(Error::Diverged("non-finite parameter after update".into()));
    }
    Ok(())
}
