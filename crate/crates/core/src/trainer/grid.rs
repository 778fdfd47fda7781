use serde::{Deserialize, Serialize};

use super::{train, TrainConfig};
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TkgmlpModel};
use crate::rng::derive_seed;

/// Candidate values per hyperparameter. Enumeration order is the nested
/// loop kan_layers → gmlp_layers → grid_size → hidden_dim → dropout, with
/// dropout varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpace {
    pub kan_layers: Vec<usize>,
    pub gmlp_layers: Vec<usize>,
    pub grid_size: Vec<usize>,
    pub hidden_dim: Vec<usize>,
    pub dropout: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub kan_layers: usize,
    pub gmlp_layers: usize,
    pub grid_size: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
}

impl GridPoint {
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            kan_layers: self.kan_layers,
            gmlp_layers: self.gmlp_layers,
            grid_size: self.grid_size,
            hidden_dim: self.hidden_dim,
            dropout: self.dropout,
            ..base.clone()
        }
    }
}

impl GridSpace {
    /// The reference 96-point search space: 2 × 2 × 2 × 3 × 4.
    pub fn standard() -> Self {
        Self {
            kan_layers: vec![1, 2],
            gmlp_layers: vec![1, 2],
            grid_size: vec![5, 10],
            hidden_dim: vec![512, 1024, 2048],
            dropout: vec![0.0, 0.3, 0.5, 0.7],
        }
    }

    /// One point carrying the base model's settings.
    pub fn singleton(base: &ModelConfig) -> Self {
        Self {
            kan_layers: vec![base.kan_layers],
            gmlp_layers: vec![base.gmlp_layers],
            grid_size: vec![base.grid_size],
            hidden_dim: vec![base.hidden_dim],
            dropout: vec![base.dropout],
        }
    }

    pub fn len(&self) -> usize {
        self.kan_layers.len()
            * self.gmlp_layers.len()
            * self.grid_size.len()
            * self.hidden_dim.len()
            * self.dropout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn enumerate(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &kan_layers in &self.kan_layers {
            for &gmlp_layers in &self.gmlp_layers {
                for &grid_size in &self.grid_size {
                    for &hidden_dim in &self.hidden_dim {
                        for &dropout in &self.dropout {
                            out.push(GridPoint {
                                index: out.len(),
                                kan_layers,
                                gmlp_layers,
                                grid_size,
                                hidden_dim,
                                dropout,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub valid_ks: f64,
    pub valid_auc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub point: GridPoint,
    /// Seed used for both model initialization and training.
    pub seed: u64,
    pub outcome: std::result::Result<GridSummary, String>,
}

/// Seed for configuration `index`.
pub fn config_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(base_seed, index as u64)
}

/// Trains every configuration and ranks by validation KS, then AUC, then
/// configuration index. Failed configurations sort last and keep their
/// error message.
pub fn grid_search(
    space: &GridSpace,
    base: &ModelConfig,
    x_train: &Batch,
    y_train: &[f64],
    x_valid: &Batch,
    y_valid: &[f64],
    cfg: &TrainConfig,
) -> Result<Vec<GridResult>> {
    if space.is_empty() {
        return Err(Error::Config("grid space is empty".into()));
    }
    let mut results: Vec<GridResult> = space
        .enumerate()
        .into_iter()
        .map(|point| {
            let seed = config_seed(cfg.seed, point.index);
            let run = || -> Result<GridSummary> {
                let mut model = TkgmlpModel::new(point.apply(base), seed)?;
                let cfg = TrainConfig {
                    seed,
                    ..cfg.clone()
                };
                let out = train(&mut model, x_train, y_train, x_valid, y_valid, &cfg)?;
                Ok(GridSummary {
                    valid_ks: out.best_ks,
                    valid_auc: out.best_auc,
                    best_epoch: out.best_epoch,
                    epochs_run: out.history.len(),
                })
            };
            GridResult {
                point,
                seed,
                outcome: run().map_err(|e| e.to_string()),
            }
        })
        .collect();
    results.sort_by(|a, b| match (&a.outcome, &b.outcome) {
        (Ok(x), Ok(y)) => y
            .valid_ks
            .total_cmp(&x.valid_ks)
            .then(y.valid_auc.total_cmp(&x.valid_auc))
            .then(a.point.index.cmp(&b.point.index)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        _ => a.point.index.cmp(&b.point.index),
    });
    Ok(results)
}
