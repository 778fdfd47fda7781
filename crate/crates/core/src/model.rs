//! The full network: input batch norm → KAN stack (+ dropout) → gMLP blocks →
//! linear head → sigmoid score.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::batch::{Batch, Mode};
use crate::error::{Error, Result};
use crate::gmlp::{GmlpBlock, GmlpCache};
use crate::kan::{KanCache, KanLayer, DEFAULT_SPLINE_RANGE};
use crate::nn::{
    sigmoid, BatchNorm, BatchNormCache, Dropout, DropoutMask, Linear, Param, Parameters,
};
use crate::rng::seeded;

/// Where dropout sits in the KAN stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KanDropout {
    #[default]
    AfterEachLayer,
    AfterStack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the encoded feature vector.
    pub input_dim: usize,
    pub kan_layers: usize,
    pub gmlp_layers: usize,
    pub hidden_dim: usize,
    pub grid_size: usize,
    pub spline_degree: usize,
    pub spline_range: (f64, f64),
    pub dropout: f64,
    pub kan_dropout: KanDropout,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 0,
            kan_layers: 1,
            gmlp_layers: 2,
            hidden_dim: 64,
            grid_size: 5,
            spline_degree: 3,
            spline_range: DEFAULT_SPLINE_RANGE,
            dropout: 0.3,
            kan_dropout: KanDropout::AfterEachLayer,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kan_layers == 0 && self.gmlp_layers == 0 {
            return Err(Error::Config(
                "model needs at least one KAN layer or gMLP block".into(),
            ));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config(format!(
                "input_dim ({}) and hidden_dim ({}) must be positive",
                self.input_dim, self.hidden_dim
            )));
        }
        if self.kan_layers > 0 && self.grid_size == 0 {
            return Err(Error::Config("grid_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} not in [0,1)",
                self.dropout
            )));
        }
        if !(self.spline_range.0 < self.spline_range.1) {
            return Err(Error::Range {
                lo: self.spline_range.0,
                hi: self.spline_range.1,
            });
        }
        Ok(())
    }

    /// Parameter count implied by the shapes, without building the model.
    pub fn param_count(&self) -> usize {
        let (d, h) = (self.input_dim, self.hidden_dim);
        let nb = self.grid_size + self.spline_degree;
        let mut total = 2 * d;
        let mut width = d;
        for _ in 0..self.kan_layers {
            total += width * h * nb + 2 * width * h;
            width = h;
        }
        for _ in 0..self.gmlp_layers {
            total += 2 * width + 2 * width * h + 2 * h;
            width = h;
        }
        total + h + 1
    }
}

/// Identifies one stage of the network, e.g. for freezing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    InputNorm,
    Kan(usize),
    Gmlp(usize),
    Head,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TkgmlpModel {
    config: ModelConfig,
    pub input_norm: BatchNorm,
    pub kan: Vec<KanLayer>,
    pub kan_dropout: Dropout,
    pub gmlp: Vec<GmlpBlock>,
    pub head: Linear,
}

#[derive(Debug, Clone)]
struct KanStep {
    cache: KanCache,
    mask: Option<DropoutMask>,
}

/// Everything [`TkgmlpModel::backward`] needs from a train-mode forward.
#[derive(Debug, Clone)]
pub struct ModelCache {
    mode: Mode,
    input_norm: BatchNormCache,
    kan: Vec<KanStep>,
    gmlp: Vec<GmlpCache>,
    head_input: Batch,
    logits: Vec<f64>,
}

impl ModelCache {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

impl TkgmlpModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded(seed);
        let h = config.hidden_dim;
        let mut width = config.input_dim;
        let mut kan = Vec::with_capacity(config.kan_layers);
        for _ in 0..config.kan_layers {
            kan.push(KanLayer::new(
                width,
                h,
                config.grid_size,
                config.spline_degree,
                config.spline_range,
                &mut rng,
            )?);
            width = h;
        }
        let mut gmlp = Vec::with_capacity(config.gmlp_layers);
        for _ in 0..config.gmlp_layers {
            gmlp.push(GmlpBlock::new(width, h, config.dropout, &mut rng)?);
            width = h;
        }
        let head = Linear::new(width, 1, &mut rng);
        Ok(Self {
            input_norm: BatchNorm::new(config.input_dim),
            kan,
            kan_dropout: Dropout::new(config.dropout)?,
            gmlp,
            head,
            config,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn kan_dropout_after(&self, layer: usize) -> bool {
        match self.config.kan_dropout {
            KanDropout::AfterEachLayer => true,
            KanDropout::AfterStack => layer + 1 == self.kan.len(),
        }
    }

    /// Runs the network. In train mode batch-norm running statistics are
    /// updated and dropout masks are drawn from `rng`.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: &Batch,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Vec<f64>, ModelCache)> {
        x.ensure_cols(self.config.input_dim, "model input")?;
        let (mut h, input_norm) = self.input_norm.forward(x, mode)?;
        let mut kan_steps = Vec::with_capacity(self.kan.len());
        for i in 0..self.kan.len() {
            let (y, cache) = self.kan[i].forward(&h)?;
            if self.kan_dropout_after(i) {
                let (y, mask) = self.kan_dropout.apply(&y, mode, rng);
                kan_steps.push(KanStep {
                    cache,
                    mask: Some(mask),
                });
                h = y;
            } else {
                kan_steps.push(KanStep { cache, mask: None });
                h = y;
            }
        }
        let mut gmlp_caches = Vec::with_capacity(self.gmlp.len());
        for block in &mut self.gmlp {
            let (y, cache) = block.forward(&h, mode, rng)?;
            gmlp_caches.push(cache);
            h = y;
        }
        let logits = self.head.forward(&h)?.into_data();
        let scores = logits.iter().map(|&z| sigmoid(z)).collect();
        Ok((
            scores,
            ModelCache {
                mode,
                input_norm,
                kan: kan_steps,
                gmlp: gmlp_caches,
                head_input: h,
                logits,
            },
        ))
    }

    /// Inference-mode logits without caches or mutation.
    pub fn logits(&self, x: &Batch) -> Result<Vec<f64>> {
        x.ensure_cols(self.config.input_dim, "model input")?;
        let (mut h, _) = self.input_norm.forward_inference(x)?;
        for layer in &self.kan {
            h = layer.infer(&h)?;
        }
        for block in &self.gmlp {
            h = block.infer(&h)?;
        }
        Ok(self.head.forward(&h)?.into_data())
    }

    /// Inference-mode scores in (0, 1).
    pub fn predict(&self, x: &Batch) -> Result<Vec<f64>> {
        Ok(self.logits(x)?.into_iter().map(sigmoid).collect())
    }

    /// Scores for a large batch, evaluated in chunks to bound memory.
    pub fn predict_chunked(&self, x: &Batch, chunk: usize) -> Result<Vec<f64>> {
        let chunk = chunk.max(1);
        let mut out = Vec::with_capacity(x.rows());
        let mut start = 0;
        while start < x.rows() {
            let end = (start + chunk).min(x.rows());
            let idx: Vec<usize> = (start..end).collect();
            out.extend(self.predict(&x.select_rows(&idx))?);
            start = end;
        }
        Ok(out)
    }

    /// Backpropagates `dL/dlogit` (one value per row) through the network,
    /// accumulating into every non-frozen parameter's gradient.
    pub fn backward(&mut self, grad_logits: &[f64], cache: &ModelCache) -> Result<()> {
        if cache.mode != Mode::Train {
            return Err(Error::StaleCache(
                "backward needs a train-mode forward cache".into(),
            ));
        }
        if grad_logits.len() != cache.logits.len() {
            return Err(Error::Shape(format!(
                "{} logit gradients for {} rows",
                grad_logits.len(),
                cache.logits.len()
            )));
        }
        let up = Batch::from_raw(grad_logits.len(), 1, grad_logits.to_vec());
        let mut g = self.head.backward(&up, &cache.head_input)?;
        for (block, c) in self.gmlp.iter_mut().zip(&cache.gmlp).rev() {
            g = block.backward(&g, c)?;
        }
        for (layer, step) in self.kan.iter_mut().zip(&cache.kan).rev() {
            if let Some(mask) = &step.mask {
                g = mask.backward(&g)?;
            }
            g = layer.backward(&g, &step.cache)?;
        }
        self.input_norm.backward(&g, &cache.input_norm)?;
        Ok(())
    }

    pub fn set_stage_frozen(&mut self, stage: Stage, frozen: bool) -> Result<()> {
        match stage {
            Stage::InputNorm => self.input_norm.set_frozen(frozen),
            Stage::Head => self.head.set_frozen(frozen),
            Stage::Kan(i) => self
                .kan
                .get_mut(i)
                .ok_or_else(|| Error::Config(format!("no KAN layer {i}")))?
                .set_frozen(frozen),
            Stage::Gmlp(i) => self
                .gmlp
                .get_mut(i)
                .ok_or_else(|| Error::Config(format!("no gMLP block {i}")))?
                .set_frozen(frozen),
        }
        Ok(())
    }
}

impl Parameters for TkgmlpModel {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.input_norm.params();
        for l in &self.kan {
            v.extend(l.params());
        }
        for b in &self.gmlp {
            v.extend(b.params());
        }
        v.extend(self.head.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.input_norm.params_mut();
        for l in &mut self.kan {
            v.extend(l.params_mut());
        }
        for b in &mut self.gmlp {
            v.extend(b.params_mut());
        }
        v.extend(self.head.params_mut());
        v
    }
}
