use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{init_params, InitScheme};
use super::param::{Param, Parameters};
use crate::batch::{gemm, Batch};
use crate::error::{Error, Result};

/// Affine map `y = xW + b` with `W` stored `in_dim × out_dim` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    in_dim: usize,
    out_dim: usize,
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: Param::new(init_params(in_dim, out_dim, InitScheme::XavierUniform, rng)),
            bias: Param::new(init_params(1, out_dim, InitScheme::Zeros, rng)),
        }
    }

    /// Builds a layer from explicit values (`weight` is `in_dim × out_dim`).
    pub fn from_parts(weight: &Batch, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.cols() {
            return Err(Error::Shape(format!(
                "bias length {} != out_dim {}",
                bias.len(),
                weight.cols()
            )));
        }
        Ok(Self {
            in_dim: weight.rows(),
            out_dim: weight.cols(),
            weight: Param::new(weight.data().to_vec()),
            bias: Param::new(bias),
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn forward(&self, x: &Batch) -> Result<Batch> {
        x.ensure_cols(self.in_dim, "linear")?;
        let mut y = Batch::zeros(x.rows(), self.out_dim);
        for r in 0..x.rows() {
            y.row_mut(r).copy_from_slice(&self.bias.value);
        }
        gemm(
            x.rows(),
            self.in_dim,
            self.out_dim,
            x.data(),
            false,
            &self.weight.value,
            false,
            y.data_mut(),
            true,
        );
        Ok(y)
    }

    /// Returns dL/dx; accumulates dL/dW = xᵀ·upstream and dL/db = column sums.
    /// `input` is the batch the matching forward call saw.
    pub fn backward(&mut self, upstream: &Batch, input: &Batch) -> Result<Batch> {
        if upstream.cols() != self.out_dim
            || input.cols() != self.in_dim
            || upstream.rows() != input.rows()
        {
            return Err(Error::StaleCache(format!(
                "linear {}→{}: upstream {:?}, input {:?}",
                self.in_dim,
                self.out_dim,
                upstream.shape(),
                input.shape()
            )));
        }
        let n = input.rows();
        if let Some(gw) = self.weight.grad_mut() {
            gemm(
                self.in_dim,
                n,
                self.out_dim,
                input.data(),
                true,
                upstream.data(),
                false,
                gw,
                true,
            );
        }
        if let Some(gb) = self.bias.grad_mut() {
            for r in 0..n {
                for (g, u) in gb.iter_mut().zip(upstream.row(r)) {
                    *g += u;
                }
            }
        }
        let mut dx = Batch::zeros(n, self.in_dim);
        gemm(
            n,
            self.out_dim,
            self.in_dim,
            upstream.data(),
            false,
            &self.weight.value,
            true,
            dx.data_mut(),
            false,
        );
        Ok(dx)
    }
}

impl Parameters for Linear {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
