//! Kolmogorov–Arnold layer.
//!
//! Every (output `q`, input `p`) edge carries its own univariate function
//!
//! ```text
//! φ_qp(x) = w_b[q][p]·SiLU(x) + w_s[q][p]·Σ_i c[q][p][i]·B_i(x)
//! ```
//!
//! and output `q` is the sum of its incoming edges. All edges share one knot
//! vector, so each input entry is expanded into its `n_basis` spline values
//! once per batch. The layer then reduces to two GEMMs: `SiLU(X)·w_bᵀ` and
//! `B(X)·W_eff`, where `W_eff[(p, i), q] = w_s[q][p]·c[q][p][i]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::batch::{gemm, Batch};
use crate::error::{Error, Result};
use crate::nn::{init_params, silu, silu_derivative, InitScheme, Param, Parameters};
use crate::spline::KnotVector;

pub const DEFAULT_SPLINE_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanLayer {
    in_dim: usize,
    out_dim: usize,
    knots: KnotVector,
    /// `out_dim × in_dim × n_basis`
    pub spline_coeffs: Param,
    /// `out_dim × in_dim`
    pub base_weight: Param,
    /// `out_dim × in_dim`
    pub spline_weight: Param,
}

/// Forward-pass state needed by [`KanLayer::backward`].
#[derive(Debug, Clone)]
pub struct KanCache {
    input: Batch,
    /// `rows × (in_dim·n_basis)`
    basis: Batch,
    /// Derivatives of `basis` w.r.t. the input entry.
    basis_deriv: Batch,
}

impl KanCache {
    pub fn basis(&self) -> &Batch {
        &self.basis
    }
}

impl KanLayer {
    /// Fresh layer: `w_b` fan-based uniform, `w_s = 1`, `c` uniform noise of
    /// scale `0.1 / grid_size`.
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        grid_size: usize,
        degree: usize,
        range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config(format!(
                "KAN layer dims must be positive, got {in_dim}→{out_dim}"
            )));
        }
        let knots = KnotVector::uniform(grid_size, degree, range.0, range.1)?;
        let nb = knots.n_basis();
        let base_bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let base_weight = init_params(out_dim, in_dim, InitScheme::Uniform(base_bound), rng);
        let coeffs = init_params(
            out_dim * in_dim,
            nb,
            InitScheme::Uniform(0.1 / grid_size as f64),
            rng,
        );
        Ok(Self {
            in_dim,
            out_dim,
            knots,
            spline_coeffs: Param::new(coeffs),
            base_weight: Param::new(base_weight),
            spline_weight: Param::new(vec![1.0; out_dim * in_dim]),
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

    #[inline]
    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    #[inline]
    pub fn n_basis(&self) -> usize {
        self.knots.n_basis()
    }

    #[inline]
    fn coeff_index(&self, q: usize, p: usize, i: usize) -> usize {
        (q * self.in_dim + p) * self.n_basis() + i
    }

    pub fn coeff(&self, q: usize, p: usize, i: usize) -> f64 {
        self.spline_coeffs.value[self.coeff_index(q, p, i)]
    }

    /// `W_eff` laid out `(in_dim·n_basis) × out_dim`.
    fn effective_weights(&self) -> Vec<f64> {
        let nb = self.n_basis();
        let mut w = vec![0.0; self.in_dim * nb * self.out_dim];
        for q in 0..self.out_dim {
            for p in 0..self.in_dim {
                let ws = self.spline_weight.value[q * self.in_dim + p];
                let base = self.coeff_index(q, p, 0);
                for i in 0..nb {
                    w[(p * nb + i) * self.out_dim + q] = ws * self.spline_coeffs.value[base + i];
                }
            }
        }
        w
    }

    fn expand(&self, x: &Batch, with_deriv: bool) -> (Batch, Batch) {
        let nb = self.n_basis();
        let width = self.in_dim * nb;
        let mut basis = Batch::zeros(x.rows(), width);
        let mut deriv = if with_deriv {
            Batch::zeros(x.rows(), width)
        } else {
            Batch::zeros(0, width)
        };
        let mut work = vec![0.0; self.knots.knots().len() - 1];
        let mut scratch = vec![0.0; nb];
        for r in 0..x.rows() {
            for (p, &u) in x.row(r).iter().enumerate() {
                let span = p * nb..(p + 1) * nb;
                if with_deriv {
                    self.knots.basis_with_derivative_into(
                        u,
                        &mut basis.row_mut(r)[span.clone()],
                        &mut scratch,
                        &mut work,
                    );
                    deriv.row_mut(r)[span].copy_from_slice(&scratch);
                } else {
                    self.knots
                        .basis_into(u, &mut basis.row_mut(r)[span], &mut work);
                }
            }
        }
        (basis, deriv)
    }

    fn contract(&self, x: &Batch, basis: &Batch) -> Batch {
        let rows = x.rows();
        let silu_x = x.map(silu);
        let mut y = Batch::zeros(rows, self.out_dim);
        gemm(
            rows,
            self.in_dim,
            self.out_dim,
            silu_x.data(),
            false,
            &self.base_weight.value,
            true,
            y.data_mut(),
            false,
        );
        let w_eff = self.effective_weights();
        gemm(
            rows,
            self.in_dim * self.n_basis(),
            self.out_dim,
            basis.data(),
            false,
            &w_eff,
            false,
            y.data_mut(),
            true,
        );
        y
    }

    pub fn forward(&self, x: &Batch) -> Result<(Batch, KanCache)> {
        x.ensure_cols(self.in_dim, "KAN layer")?;
        let (basis, basis_deriv) = self.expand(x, true);
        let y = self.contract(x, &basis);
        Ok((
            y,
            KanCache {
                input: x.clone(),
                basis,
                basis_deriv,
            },
        ))
    }

    /// Forward pass without keeping anything for backward.
    pub fn infer(&self, x: &Batch) -> Result<Batch> {
        x.ensure_cols(self.in_dim, "KAN layer")?;
        let (basis, _) = self.expand(x, false);
        Ok(self.contract(x, &basis))
    }

    /// Returns dL/dx and accumulates gradients for `w_b`, `w_s` and `c`.
    pub fn backward(&mut self, upstream: &Batch, cache: &KanCache) -> Result<Batch> {
        let rows = cache.input.rows();
        let nb = self.n_basis();
        let width = self.in_dim * nb;
        if upstream.shape() != (rows, self.out_dim)
            || cache.input.cols() != self.in_dim
            || cache.basis.cols() != width
            || cache.basis_deriv.rows() != rows
        {
            return Err(Error::StaleCache(format!(
                "KAN {}→{}: upstream {:?}, cached input {:?}",
                self.in_dim,
                self.out_dim,
                upstream.shape(),
                cache.input.shape()
            )));
        }
        let silu_x = cache.input.map(silu);

        // dL/dw_b = Gᵀ·SiLU(X)
        if let Some(g) = self.base_weight.grad_mut() {
            gemm(
                self.out_dim,
                rows,
                self.in_dim,
                upstream.data(),
                true,
                silu_x.data(),
                false,
                g,
                true,
            );
        }

        // dL/dW_eff = B(X)ᵀ·G, then split into w_s and c by the product rule.
        let mut d_eff = vec![0.0; width * self.out_dim];
        gemm(
            width,
            rows,
            self.out_dim,
            cache.basis.data(),
            true,
            upstream.data(),
            false,
            &mut d_eff,
            false,
        );
        let coeff_frozen = self.spline_coeffs.frozen;
        let ws_frozen = self.spline_weight.frozen;
        if !coeff_frozen || !ws_frozen {
            self.spline_coeffs.grad_mut();
            self.spline_weight.grad_mut();
            for q in 0..self.out_dim {
                for p in 0..self.in_dim {
                    let e = q * self.in_dim + p;
                    let ws = self.spline_weight.value[e];
                    let base = (q * self.in_dim + p) * nb;
                    let mut dws = 0.0;
                    for i in 0..nb {
                        let d = d_eff[(p * nb + i) * self.out_dim + q];
                        if !coeff_frozen {
                            self.spline_coeffs.grad[base + i] += ws * d;
                        }
                        dws += self.spline_coeffs.value[base + i] * d;
                    }
                    if !ws_frozen {
                        self.spline_weight.grad[e] += dws;
                    }
                }
            }
        }

        // dL/dx = (G·w_b)⊙SiLU'(x) + Σ_i (G·W_effᵀ)_{p,i}·B'_i(x)
        let mut dx = Batch::zeros(rows, self.in_dim);
        gemm(
            rows,
            self.out_dim,
            self.in_dim,
            upstream.data(),
            false,
            &self.base_weight.value,
            false,
            dx.data_mut(),
            false,
        );
        let w_eff = self.effective_weights();
        let mut d_basis = vec![0.0; rows * width];
        gemm(
            rows,
            self.out_dim,
            width,
            upstream.data(),
            false,
            &w_eff,
            true,
            &mut d_basis,
            false,
        );
        for r in 0..rows {
            let xr = cache.input.row(r);
            let der = cache.basis_deriv.row(r);
            let db = &d_basis[r * width..(r + 1) * width];
            let dxr = dx.row_mut(r);
            for p in 0..self.in_dim {
                let mut s = dxr[p] * silu_derivative(xr[p]);
                for i in p * nb..(p + 1) * nb {
                    s += db[i] * der[i];
                }
                dxr[p] = s;
            }
        }
        Ok(dx)
    }
}

impl Parameters for KanLayer {
    fn params(&self) -> Vec<&Param> {
        vec![&self.base_weight, &self.spline_weight, &self.spline_coeffs]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.base_weight,
            &mut self.spline_weight,
            &mut self.spline_coeffs,
        ]
    }
}
