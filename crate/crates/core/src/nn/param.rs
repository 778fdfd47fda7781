use serde::{Deserialize, Serialize};

/// A flat parameter tensor with its gradient buffer.
///
/// Gradients are not serialized; call [`Param::zero_grad`] after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub value: Vec<f64>,
    #[serde(skip)]
    pub grad: Vec<f64>,
    /// Frozen parameters receive no gradient and are skipped by the optimizer.
    #[serde(default)]
    pub frozen: bool,
}

impl Param {
    pub fn new(value: Vec<f64>) -> Self {
        let grad = vec![0.0; value.len()];
        Self {
            value,
            grad,
            frozen: false,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.value.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.clear();
        self.grad.resize(self.value.len(), 0.0);
    }

    /// Adds `delta` into the gradient unless frozen.
    #[inline]
    pub(crate) fn accumulate(&mut self, delta: &[f64]) {
        if self.frozen {
            return;
        }
        if self.grad.len() != self.value.len() {
            self.zero_grad();
        }
        for (g, d) in self.grad.iter_mut().zip(delta) {
            *g += d;
        }
    }

    /// Mutable gradient buffer for in-place accumulation, or `None` if frozen.
    #[inline]
    pub(crate) fn grad_mut(&mut self) -> Option<&mut [f64]> {
        if self.frozen {
            return None;
        }
        if self.grad.len() != self.value.len() {
            self.zero_grad();
        }
        Some(&mut self.grad)
    }
}

/// Layers expose their parameters in a fixed order so optimizer state lines up.
pub trait Parameters {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn set_frozen(&mut self, frozen: bool) {
        for p in self.params_mut() {
            p.frozen = frozen;
        }
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
