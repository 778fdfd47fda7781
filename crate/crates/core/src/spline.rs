//! Knot vectors and B-spline basis evaluation by the Cox–de Boor recursion.
//!
//! A uniform knot vector over `[a, b]` with `G` intervals and degree `p` is
//! extended by `p` knots of the same spacing on each side, giving `G + 2p + 1`
//! knots and `G + p` basis functions. Those basis functions sum to one on
//! `[a, b]`; outside the extended knots every basis function is zero.
//!
//! Degree-0 indicators are half-open, `[u_i, u_{i+1})`, except that `u = b`
//! is assigned to the last interval inside the domain so partition of unity
//! also holds at the right endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    /// Uniform grid of `grid_size` intervals on `[lo, hi]`, extended by
    /// `degree` knots beyond each end.
    pub fn uniform(grid_size: usize, degree: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Range { lo, hi });
        }
        if grid_size == 0 {
            return Err(Error::Config("grid_size must be at least 1".into()));
        }
        let h = (hi - lo) / grid_size as f64;
        let mut knots = Vec::with_capacity(grid_size + 2 * degree + 1);
        for k in (1..=degree).rev() {
            knots.push(lo - k as f64 * h);
        }
        for i in 0..=grid_size {
            let t = i as f64 / grid_size as f64;
            knots.push(lo * (1.0 - t) + hi * t);
        }
        for k in 1..=degree {
            knots.push(hi + k as f64 * h);
        }
        Ok(Self { knots, degree })
    }

    /// Arbitrary non-decreasing knots. Needs at least `degree + 2` knots so
    /// that one basis function exists.
    pub fn from_knots(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if knots.len() < degree + 2 {
            return Err(Error::Config(format!(
                "{} knots cannot carry a degree-{degree} basis",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("knots must be finite and non-decreasing".into()));
        }
        Ok(Self { knots, degree })
    }

    #[inline]
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn n_basis(&self) -> usize {
        self.knots.len() - 1 - self.degree
    }

    /// Number of knot intervals inside the domain.
    #[inline]
    pub fn grid_size(&self) -> usize {
        self.n_basis() - self.degree
    }

    /// `(a, b)`: the range on which the basis is a partition of unity.
    #[inline]
    pub fn domain(&self) -> (f64, f64) {
        (
            self.knots[self.degree],
            self.knots[self.knots.len() - 1 - self.degree],
        )
    }

    /// Index of the degree-0 interval containing `u`, if any.
    fn span(&self, u: f64) -> Option<usize> {
        let intervals = self.knots.len() - 1;
        let (_, hi) = self.domain();
        if u == hi {
            return Some(intervals - self.degree - 1);
        }
        let count = self.knots.partition_point(|&k| k <= u);
        if count == 0 || count > intervals {
            None
        } else {
            Some(count - 1)
        }
    }

    /// Runs the recursion up to `degree`, leaving degree-`d` values in
    /// `work[..intervals - d]`. Returns `false` when every basis is zero.
    fn recurse(&self, u: f64, degree: usize, work: &mut [f64]) -> bool {
        let k = &self.knots;
        work.iter_mut().for_each(|w| *w = 0.0);
        let Some(s) = self.span(u) else {
            return false;
        };
        work[s] = 1.0;
        let intervals = k.len() - 1;
        for d in 1..=degree {
            for i in 0..intervals - d {
                let dl = k[i + d] - k[i];
                let dr = k[i + d + 1] - k[i + 1];
                let left = if dl > 0.0 {
                    (u - k[i]) / dl * work[i]
                } else {
                    0.0
                };
                let right = if dr > 0.0 {
                    (k[i + d + 1] - u) / dr * work[i + 1]
                } else {
                    0.0
                };
                work[i] = left + right;
            }
        }
        true
    }

    /// All `N_{i,p}(u)`, length [`n_basis`](Self::n_basis).
    pub fn basis(&self, u: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_basis()];
        let mut work = vec![0.0; self.knots.len() - 1];
        self.basis_into(u, &mut out, &mut work);
        out
    }

    /// Allocation-free variant; `work` must hold `knots.len() − 1` values.
    pub fn basis_into(&self, u: f64, out: &mut [f64], work: &mut [f64]) {
        self.recurse(u, self.degree, work);
        out.copy_from_slice(&work[..self.n_basis()]);
    }

    /// All `dN_{i,p}/du`, length [`n_basis`](Self::n_basis).
    pub fn basis_derivative(&self, u: f64) -> Vec<f64> {
        let n = self.n_basis();
        let mut vals = vec![0.0; n];
        let mut ders = vec![0.0; n];
        let mut work = vec![0.0; self.knots.len() - 1];
        self.basis_with_derivative_into(u, &mut vals, &mut ders, &mut work);
        ders
    }

    /// Values and first derivatives in one pass.
    ///
    /// `dN_{i,p} = p/(u_{i+p} − u_i)·N_{i,p−1} − p/(u_{i+p+1} − u_{i+1})·N_{i+1,p−1}`
    pub fn basis_with_derivative_into(
        &self,
        u: f64,
        vals: &mut [f64],
        ders: &mut [f64],
        work: &mut [f64],
    ) {
        let p = self.degree;
        let n = self.n_basis();
        if p == 0 {
            self.recurse(u, 0, work);
            vals.copy_from_slice(&work[..n]);
            ders.iter_mut().for_each(|d| *d = 0.0);
            return;
        }
        if !self.recurse(u, p - 1, work) {
            vals.iter_mut().for_each(|v| *v = 0.0);
            ders.iter_mut().for_each(|d| *d = 0.0);
            return;
        }
        let k = &self.knots;
        let pf = p as f64;
        for i in 0..n {
            let dl = k[i + p] - k[i];
            let dr = k[i + p + 1] - k[i + 1];
            let (a, da) = if dl > 0.0 {
                ((u - k[i]) / dl * work[i], pf / dl * work[i])
            } else {
                (0.0, 0.0)
            };
            let (b, db) = if dr > 0.0 {
                ((k[i + p + 1] - u) / dr * work[i + 1], pf / dr * work[i + 1])
            } else {
                (0.0, 0.0)
            };
            vals[i] = a + b;
            ders[i] = da - db;
        }
    }
}
