//! Gated-MLP block: batch norm → SwiGLU → dropout, with no residual path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::batch::{Batch, Mode};
use crate::error::{Error, Result};
use crate::nn::{
    silu, silu_derivative, BatchNorm, BatchNormCache, Dropout, DropoutMask, Linear, Param,
    Parameters,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmlpBlock {
    pub norm: BatchNorm,
    /// `xV + b₁`, the SiLU-activated branch.
    pub gate: Linear,
    /// `xU + b₂`
    pub value: Linear,
    pub dropout: Dropout,
}

#[derive(Debug, Clone)]
pub struct SwigluCache {
    input: Batch,
    gate_pre: Batch,
    value_out: Batch,
}

#[derive(Debug, Clone)]
pub struct GmlpCache {
    norm: BatchNormCache,
    swiglu: SwigluCache,
    mask: DropoutMask,
}

impl GmlpCache {
    pub fn mask(&self) -> &DropoutMask {
        &self.mask
    }
}

impl GmlpBlock {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dim: usize,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || hidden_dim == 0 {
            return Err(Error::Config(format!(
                "gMLP dims must be positive, got {in_dim}→{hidden_dim}"
            )));
        }
        Ok(Self {
            norm: BatchNorm::new(in_dim),
            gate: Linear::new(in_dim, hidden_dim, rng),
            value: Linear::new(in_dim, hidden_dim, rng),
            dropout: Dropout::new(dropout_rate)?,
        })
    }

    pub fn from_parts(norm: BatchNorm, gate: Linear, value: Linear, dropout: Dropout) -> Result<Self> {
        if gate.out_dim() != value.out_dim()
            || gate.in_dim() != value.in_dim()
            || norm.dim() != gate.in_dim()
        {
            return Err(Error::Shape(format!(
                "gate {}→{}, value {}→{}, norm {}",
                gate.in_dim(),
                gate.out_dim(),
                value.in_dim(),
                value.out_dim(),
                norm.dim()
            )));
        }
        Ok(Self {
            norm,
            gate,
            value,
            dropout,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.gate.in_dim()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.gate.out_dim()
    }

    /// `SiLU(xV + b₁)`
    pub fn swiglu_gate(&self, x: &Batch) -> Result<Batch> {
        Ok(self.gate.forward(x)?.map(silu))
    }

    /// `xU + b₂`
    pub fn swiglu_value(&self, x: &Batch) -> Result<Batch> {
        self.value.forward(x)
    }

    /// `SiLU(xV + b₁) ⊗ (xU + b₂)`
    pub fn swiglu(&self, x: &Batch) -> Result<(Batch, SwigluCache)> {
        let gate_pre = self.gate.forward(x)?;
        let value_out = self.value.forward(x)?;
        let data = gate_pre
            .data()
            .iter()
            .zip(value_out.data())
            .map(|(&a, &b)| silu(a) * b)
            .collect();
        let y = Batch::from_raw(x.rows(), self.out_dim(), data);
        Ok((
            y,
            SwigluCache {
                input: x.clone(),
                gate_pre,
                value_out,
            },
        ))
    }

    pub fn swiglu_backward(&mut self, upstream: &Batch, cache: &SwigluCache) -> Result<Batch> {
        if upstream.shape() != cache.gate_pre.shape() {
            return Err(Error::StaleCache(format!(
                "SwiGLU cache {:?} vs upstream {:?}",
                cache.gate_pre.shape(),
                upstream.shape()
            )));
        }
        let n = upstream.data().len();
        let mut d_gate = Vec::with_capacity(n);
        let mut d_value = Vec::with_capacity(n);
        for ((&u, &a), &b) in upstream
            .data()
            .iter()
            .zip(cache.gate_pre.data())
            .zip(cache.value_out.data())
        {
            d_gate.push(u * b * silu_derivative(a));
            d_value.push(u * silu(a));
        }
        let (rows, h) = upstream.shape();
        let d_gate = Batch::from_raw(rows, h, d_gate);
        let d_value = Batch::from_raw(rows, h, d_value);
        let mut dx = self.gate.backward(&d_gate, &cache.input)?;
        let dx_value = self.value.backward(&d_value, &cache.input)?;
        for (a, b) in dx.data_mut().iter_mut().zip(dx_value.data()) {
            *a += b;
        }
        Ok(dx)
    }

    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: &Batch,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Batch, GmlpCache)> {
        let (normed, norm) = self.norm.forward(x, mode)?;
        let (y, swiglu) = self.swiglu(&normed)?;
        let (out, mask) = self.dropout.apply(&y, mode, rng);
        Ok((out, GmlpCache { norm, swiglu, mask }))
    }

    /// Inference-mode forward without mutating running statistics.
    pub fn infer(&self, x: &Batch) -> Result<Batch> {
        let (normed, _) = self.norm.forward_inference(x)?;
        Ok(self.swiglu(&normed)?.0)
    }

    pub fn backward(&mut self, upstream: &Batch, cache: &GmlpCache) -> Result<Batch> {
        let d_y = cache.mask.backward(upstream)?;
        let d_norm = self.swiglu_backward(&d_y, &cache.swiglu)?;
        self.norm.backward(&d_norm, &cache.norm)
    }
}

impl Parameters for GmlpBlock {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.norm.params();
        v.extend(self.gate.params());
        v.extend(self.value.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.norm.params_mut();
        v.extend(self.gate.params_mut());
        v.extend(self.value.params_mut());
        v
    }
}
