use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Param;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
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

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0)
        {
            return Err(Error::Config(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// First/second moment buffers, one pair per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &[&Param], config: AdamConfig) -> Self {
        Self {
            config,
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            t: 0,
        }
    }
}

/// One Adam update over every non-frozen parameter. Gradients are checked
/// for finiteness before anything is modified.
pub fn adam_step(params: &mut [&mut Param], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "{} parameter groups, optimizer tracks {}",
            params.len(),
            state.m.len()
        )));
    }
    for (group, p) in params.iter().enumerate() {
        if p.len() != state.m[group].len() || p.grad.len() != p.len() {
            return Err(Error::Shape(format!("parameter group {group} changed size")));
        }
        if p.frozen {
            continue;
        }
        if let Some(index) = p.grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { group, index });
        }
    }
    state.t += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.t.min(i32::MAX as u64) as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (group, p) in params.iter_mut().enumerate() {
        if p.frozen {
            continue;
        }
        let m = &mut state.m[group];
        let v = &mut state.v[group];
        let Param { value, grad, .. } = &mut **p;
        for i in 0..value.len() {
            let g = grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
