use serde::{Deserialize, Serialize};

use super::param::{Param, Parameters};
use crate::batch::{Batch, Mode};
use crate::error::{Error, Result};

pub const DEFAULT_MOMENTUM: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Per-column batch normalization with learnable scale/shift and running
/// statistics for inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    mode: Mode,
    x_hat: Batch,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Param::new(vec![1.0; dim]),
            beta: Param::zeros(dim),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: DEFAULT_MOMENTUM,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_settings(dim: usize, momentum: f64, epsilon: f64) -> Result<Self> {
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(Error::Config(format!("momentum {momentum} not in (0,1)")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {epsilon} must be > 0")));
        }
        Ok(Self {
            momentum,
            epsilon,
            ..Self::new(dim)
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&mut self, x: &Batch, mode: Mode) -> Result<(Batch, BatchNormCache)> {
        match mode {
            Mode::Train => self.forward_train(x),
            Mode::Inference => self.forward_inference(x),
        }
    }

    /// Standardizes with batch moments and folds them into the running stats.
    pub fn forward_train(&mut self, x: &Batch) -> Result<(Batch, BatchNormCache)> {
        x.ensure_cols(self.dim(), "batch norm")?;
        let n = x.rows();
        if n < 2 {
            return Err(Error::DegenerateBatch(n));
        }
        let d = self.dim();
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                let c = v - m;
                *s += c * c;
            }
        }
        var.iter_mut().for_each(|s| *s /= n as f64);

        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let (x_hat, y) = self.normalize(x, &mean, &inv_std);

        let unbias = n as f64 / (n as f64 - 1.0);
        let m = self.momentum;
        for j in 0..d {
            self.running_mean[j] = (1.0 - m) * self.running_mean[j] + m * mean[j];
            self.running_var[j] = (1.0 - m) * self.running_var[j] + m * var[j] * unbias;
        }
        Ok((
            y,
            BatchNormCache {
                mode: Mode::Train,
                x_hat,
                inv_std,
            },
        ))
    }

    pub fn forward_inference(&self, x: &Batch) -> Result<(Batch, BatchNormCache)> {
        x.ensure_cols(self.dim(), "batch norm")?;
        let inv_std: Vec<f64> = self
            .running_var
            .iter()
            .map(|v| 1.0 / (v + self.epsilon).sqrt())
            .collect();
        let (x_hat, y) = self.normalize(x, &self.running_mean, &inv_std);
        Ok((
            y,
            BatchNormCache {
                mode: Mode::Inference,
                x_hat,
                inv_std,
            },
        ))
    }

    fn normalize(&self, x: &Batch, mean: &[f64], inv_std: &[f64]) -> (Batch, Batch) {
        let d = self.dim();
        let mut x_hat = Batch::zeros(x.rows(), d);
        let mut y = Batch::zeros(x.rows(), d);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let hr = x_hat.row_mut(r);
            for j in 0..d {
                hr[j] = (xr[j] - mean[j]) * inv_std[j];
            }
            let yr = y.row_mut(r);
            for j in 0..d {
                yr[j] = self.gamma.value[j] * hr[j] + self.beta.value[j];
            }
        }
        (x_hat, y)
    }

    /// Returns dL/dx and accumulates dL/dgamma, dL/dbeta. In train mode the
    /// gradient flows through the batch mean and variance.
    pub fn backward(&mut self, upstream: &Batch, cache: &BatchNormCache) -> Result<Batch> {
        if upstream.shape() != cache.x_hat.shape() {
            return Err(Error::StaleCache(format!(
                "batch norm cache {:?} vs upstream {:?}",
                cache.x_hat.shape(),
                upstream.shape()
            )));
        }
        let d = self.dim();
        let n = upstream.rows();
        let mut sum_dy = vec![0.0; d];
        let mut sum_dy_xhat = vec![0.0; d];
        for r in 0..n {
            let ur = upstream.row(r);
            let hr = cache.x_hat.row(r);
            for j in 0..d {
                sum_dy[j] += ur[j];
                sum_dy_xhat[j] += ur[j] * hr[j];
            }
        }
        self.gamma.accumulate(&sum_dy_xhat);
        self.beta.accumulate(&sum_dy);

        let mut dx = Batch::zeros(n, d);
        match cache.mode {
            Mode::Train => {
                let nf = n as f64;
                for r in 0..n {
                    let ur = upstream.row(r);
                    let hr = cache.x_hat.row(r);
                    let dr = dx.row_mut(r);
                    for j in 0..d {
                        let scale = self.gamma.value[j] * cache.inv_std[j] / nf;
                        dr[j] = scale * (nf * ur[j] - sum_dy[j] - hr[j] * sum_dy_xhat[j]);
                    }
                }
            }
            Mode::Inference => {
                for r in 0..n {
                    let ur = upstream.row(r);
                    let dr = dx.row_mut(r);
                    for j in 0..d {
                        dr[j] = ur[j] * self.gamma.value[j] * cache.inv_std[j];
                    }
                }
            }
        }
        Ok(dx)
    }
}

impl Parameters for BatchNorm {
    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
