//! Minibatch Adam training with a step-decay learning rate, KS-based early
//! stopping and best-snapshot restoration, plus grid search.

mod adam;
mod grid;
mod schedule;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use grid::{grid_search, GridPoint, GridResult, GridSpace, GridSummary};
pub use schedule::{early_stop_check, lr_schedule, EarlyStop};

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::batch::{Batch, Mode};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::TkgmlpModel;
use crate::nn::{bce_with_logits, Parameters};
use crate::rng::{derive_seed, seeded};

const SHUFFLE_STREAM: u64 = 0;
const DROPOUT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
    /// Rows per chunk when scoring the validation split.
    pub eval_chunk: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4096,
            lr0: 1e-3,
            lr_decay_factor: 0.9,
            lr_decay_every: 20,
            max_epochs: 100,
            patience: 20,
            adam: AdamConfig::default(),
            eval_chunk: 16384,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.lr_decay_every < 1 {
            return Err(Error::Config("lr_decay_every must be at least 1".into()));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) || !(self.lr_decay_factor > 0.0) {
            return Err(Error::Config(format!(
                "bad learning rate settings lr0={} factor={}",
                self.lr0, self.lr_decay_factor
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        self.adam.validate()
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        lr_schedule(epoch, self.lr0, self.lr_decay_factor, self.lr_decay_every)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub valid_ks: f64,
    pub valid_auc: f64,
    /// Wall-clock seconds since training started. Not part of [`log_line`].
    ///
    /// [`log_line`]: EpochRecord::log_line
    #[serde(skip)]
    pub elapsed_secs: f64,
}

pub const LOG_HEADER: &str = "epoch\tlr\ttrain_loss\tvalid_ks\tvalid_auc";

impl EpochRecord {
    /// Tab-separated log row (KS/AUC in percent). Deterministic for a fixed
    /// seed, so it carries no timing.
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{:e}\t{:.10}\t{:.4}\t{:.4}",
            self.epoch,
            self.lr,
            self.train_loss,
            self.valid_ks * 100.0,
            self.valid_auc * 100.0
        )
    }

    /// [`log_line`](Self::log_line) with elapsed seconds appended.
    pub fn progress_line(&self) -> String {
        format!("{}\t{:.2}", self.log_line(), self.elapsed_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_ks: f64,
    pub best_auc: f64,
    pub stopped_early: bool,
}

/// Row ranges of one epoch's minibatches; a trailing batch of one row is
/// folded into its predecessor so batch norm always sees two rows.
fn minibatch_bounds(n: usize, batch_size: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n)
        .step_by(batch_size)
        .map(|s| (s, (s + batch_size).min(n)))
        .collect();
    if out.len() > 1 {
        let (s, e) = out[out.len() - 1];
        if e - s < 2 {
            out.pop();
            out.last_mut().unwrap().1 = e;
        }
    }
    out
}

pub fn train(
    model: &mut TkgmlpModel,
    x_train: &Batch,
    y_train: &[f64],
    x_valid: &Batch,
    y_valid: &[f64],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(model, x_train, y_train, x_valid, y_valid, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    model: &mut TkgmlpModel,
    x_train: &Batch,
    y_train: &[f64],
    x_valid: &Batch,
    y_valid: &[f64],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if x_train.rows() != y_train.len() || x_valid.rows() != y_valid.len() {
        return Err(Error::Shape("feature rows and labels disagree".into()));
    }
    if x_train.rows() < 2 {
        return Err(Error::DegenerateBatch(x_train.rows()));
    }
    x_train.ensure_cols(model.input_dim(), "training features")?;
    x_valid.ensure_cols(model.input_dim(), "validation features")?;
    let pos = y_valid.iter().filter(|&&y| y == 1.0).count();
    if pos == 0 || pos == y_valid.len() {
        return Err(Error::UndefinedMetric(
            "validation split needs both classes".into(),
        ));
    }

    let start = Instant::now();
    let mut shuffle_rng = seeded(derive_seed(cfg.seed, SHUFFLE_STREAM));
    let mut dropout_rng = seeded(derive_seed(cfg.seed, DROPOUT_STREAM));
    let mut state = AdamState::new(&model.params(), cfg.adam);
    model.zero_grad();
    let mut best = model.clone();
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut ks_history: Vec<f64> = Vec::new();
    let mut order: Vec<usize> = (0..x_train.rows()).collect();
    let bounds = minibatch_bounds(x_train.rows(), cfg.batch_size);
    let mut stopped_early = false;
    let mut y_batch = Vec::with_capacity(cfg.batch_size + 1);

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.lr(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for &(s, e) in &bounds {
            let idx = &order[s..e];
            let xb = x_train.select_rows(idx);
            y_batch.clear();
            y_batch.extend(idx.iter().map(|&r| y_train[r]));
            model.zero_grad();
            let (_, cache) = model.forward(&xb, Mode::Train, &mut dropout_rng)?;
            let (loss, grad) = bce_with_logits(cache.logits(), &y_batch)?;
            if !loss.is_finite() {
                *model = best;
                return Err(Error::Diverged { epoch, loss });
            }
            model.backward(&grad, &cache)?;
            if let Err(err) = adam_step(&mut model.params_mut(), &mut state, lr) {
                *model = best;
                return Err(err);
            }
            loss_sum += loss * (e - s) as f64;
        }
        let scores = model.predict_chunked(x_valid, cfg.eval_chunk)?;
        if scores.iter().any(|s| !s.is_finite()) {
            *model = best;
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        let report = evaluate(&scores, y_valid)?;
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / x_train.rows() as f64,
            valid_ks: report.ks,
            valid_auc: report.auc,
            elapsed_secs: start.elapsed().as_secs_f64(),
        };
        ks_history.push(report.ks);
        let check = early_stop_check(&ks_history, cfg.patience);
        if check.best_epoch == epoch {
            best = model.clone();
        }
        on_epoch(&record);
        history.push(record);
        if check.stop {
            stopped_early = true;
            break;
        }
    }

    let best_epoch = early_stop_check(&ks_history, cfg.patience).best_epoch;
    *model = best;
    model.zero_grad();
    Ok(TrainOutcome {
        best_ks: history[best_epoch].valid_ks,
        best_auc: history[best_epoch].valid_auc,
        best_epoch,
        history,
        stopped_early,
    })
}
