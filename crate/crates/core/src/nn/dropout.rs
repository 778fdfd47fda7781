use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::batch::{Batch, Mode};
use crate::error::{Error, Result};

/// Inverted dropout: survivors are scaled by `1/(1−rate)` at train time so
/// inference is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    rate: f64,
}

/// Per-entry multiplier applied in the forward pass (0 or `1/(1−rate)`).
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    scale: Vec<f64>,
}

impl DropoutMask {
    pub fn ones(len: usize) -> Self {
        Self {
            scale: vec![1.0; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.scale
    }

    /// Backward through the mask: dropped entries get zero gradient.
    pub fn backward(&self, upstream: &Batch) -> Result<Batch> {
        if upstream.data().len() != self.scale.len() {
            return Err(Error::StaleCache(format!(
                "dropout mask has {} entries, upstream {}",
                self.scale.len(),
                upstream.data().len()
            )));
        }
        let data = upstream
            .data()
            .iter()
            .zip(&self.scale)
            .map(|(u, s)| u * s)
            .collect();
        Ok(Batch::from_raw(upstream.rows(), upstream.cols(), data))
    }
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} not in [0,1)")));
        }
        Ok(Self { rate })
    }

    #[inline]
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn apply<R: Rng + ?Sized>(
        &self,
        x: &Batch,
        mode: Mode,
        rng: &mut R,
    ) -> (Batch, DropoutMask) {
        let n = x.data().len();
        if mode == Mode::Inference || self.rate == 0.0 {
            return (x.clone(), DropoutMask::ones(n));
        }
        let keep = 1.0 / (1.0 - self.rate);
        let scale: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let data = x.data().iter().zip(&scale).map(|(v, s)| v * s).collect();
        (Batch::from_raw(x.rows(), x.cols(), data), DropoutMask { scale })
    }
}
