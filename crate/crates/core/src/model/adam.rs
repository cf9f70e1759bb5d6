use super::{LfgcnModel, Params};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for every tensor, plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        AdamState {
            m: Params::zeros_like(params),
            v: Params::zeros_like(params),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradients before touching any state.
pub fn adam_step(model: &mut LfgcnModel, grads: &Params, cfg: &AdamConfig) -> Result<()> {
    for (name, g) in grads.names().into_iter().zip(grads.tensors()) {
        if g.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { tensor: name });
        }
    }
    let state = &mut model.adam;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let params = model.params.tensors_mut();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, m), v), g) in params.into_iter().zip(ms).zip(vs).zip(grads.tensors()) {
        let it = p
            .as_mut_slice()
            .iter_mut()
            .zip(m.as_mut_slice())
            .zip(v.as_mut_slice())
            .zip(g.as_slice());
        for (((p, m), v), &g) in it {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
