//! Synthetic imbalanced binary tasks with a known conditional probability.
//!
//! Columns are drawn independently from Gaussian, Exponential, Beta and
//! zero-inflated Poisson families. Labels follow
//! `y ~ Bernoulli(σ(Σ_j w_j·φ_j(z_j) + b))`, where `z_j` is column `j`
//! standardized by its analytic moments, `φ_j` is a fixed smooth transform
//! and `b` is solved by bisection so the mean probability hits the target
//! prevalence. The true probability is returned with every row, giving the
//! Bayes-optimal score.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::nn::sigmoid;
use crate::rng::{derive_seed, seeded, Rng64};

/// Class prevalence of the reference credit-scoring test set (0.47%).
pub const DEFAULT_PREVALENCE: f64 = 0.0047;

const LABEL_STREAM: u64 = 1;
const MODEL_STREAM: u64 = 2;
const CALIBRATION_STREAM: u64 = 3;
const COLUMN_STREAM: u64 = 1000;
const CALIBRATION_ROWS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ColumnFamily {
    Gaussian { mean: f64, std: f64 },
    /// Density `exp(−x/scale)/scale`.
    Exponential { scale: f64 },
    Beta { alpha: f64, beta: f64 },
    /// Zero with extra probability `pi`, otherwise Poisson(`lambda`).
    Zip { pi: f64, lambda: f64 },
}

impl ColumnFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ColumnFamily::Gaussian { mean, std } => mean.is_finite() && std > 0.0,
            ColumnFamily::Exponential { scale } => scale > 0.0 && scale.is_finite(),
            ColumnFamily::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0,
            ColumnFamily::Zip { pi, lambda } => {
                (0.0..=1.0).contains(&pi) && lambda > 0.0 && lambda.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid column family {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ColumnFamily::Gaussian { .. } => "gauss",
            ColumnFamily::Exponential { .. } => "exp",
            ColumnFamily::Beta { .. } => "beta",
            ColumnFamily::Zip { .. } => "zip",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ColumnFamily::Gaussian { mean, .. } => mean,
            ColumnFamily::Exponential { scale } => scale,
            ColumnFamily::Beta { alpha, beta } => alpha / (alpha + beta),
            ColumnFamily::Zip { pi, lambda } => (1.0 - pi) * lambda,
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            ColumnFamily::Gaussian { std, .. } => std,
            ColumnFamily::Exponential { scale } => scale,
            ColumnFamily::Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha * beta / (s * s * (s + 1.0))).sqrt()
            }
            ColumnFamily::Zip { pi, lambda } => ((1.0 - pi) * lambda * (1.0 + pi * lambda)).sqrt(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{self:?}: {e}"));
        Ok(match *self {
            ColumnFamily::Gaussian { mean, std } => {
                let d = Normal::new(mean, std).map_err(|e| bad(&e))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ColumnFamily::Exponential { scale } => {
                let d = Exp::new(1.0 / scale).map_err(|e| bad(&e))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ColumnFamily::Beta { alpha, beta } => {
                let d = Beta::new(alpha, beta).map_err(|e| bad(&e))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ColumnFamily::Zip { pi, lambda } => {
                let d = Poisson::new(lambda).map_err(|e| bad(&e))?;
                (0..n)
                    .map(|_| {
                        // gate first so π = 1 never touches the Poisson draw
                        if rng.random::<f64>() < pi {
                            0.0
                        } else {
                            d.sample(rng)
                        }
                    })
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub columns: Vec<ColumnFamily>,
    /// Target mean of the true probability, in (0, 0.5].
    pub prevalence: f64,
    /// How many columns enter the label model.
    pub active_columns: usize,
    /// Scale of the label-model weights; larger means an easier task.
    pub signal: f64,
    pub seed: u64,
}

impl SyntheticTaskSpec {
    /// 32 columns, 8 per family, at the reference prevalence. ZIP columns
    /// sweep the excess-zero probability.
    pub fn desk_tiny(seed: u64) -> Self {
        let mut columns = Vec::with_capacity(32);
        columns.extend((0..8).map(|_| ColumnFamily::Gaussian {
            mean: 0.0,
            std: 1.0,
        }));
        columns.extend((0..8).map(|_| ColumnFamily::Exponential { scale: 1.0 }));
        columns.extend((0..8).map(|_| ColumnFamily::Beta {
            alpha: 0.5,
            beta: 0.5,
        }));
        columns.extend((0..8).map(|k| ColumnFamily::Zip {
            pi: 0.1 * (k + 1) as f64,
            lambda: 50.0,
        }));
        Self {
            columns,
            prevalence: DEFAULT_PREVALENCE,
            active_columns: 12,
            signal: 1.0,
            seed,
        }
    }

    /// Mostly zero-inflated count columns with mixed rates, plus a few
    /// Gaussian and heavy-tailed Exponential columns; prevalence 5%.
    pub fn zip_heavy(seed: u64) -> Self {
        let mut columns = Vec::with_capacity(24);
        for (k, &lambda) in [1.0, 3.0, 10.0, 50.0].iter().cycle().take(16).enumerate() {
            columns.push(ColumnFamily::Zip {
                pi: 0.2 + 0.6 * (k % 5) as f64 / 4.0,
                lambda,
            });
        }
        columns.extend((0..4).map(|k| ColumnFamily::Exponential {
            scale: 1.0 + 4.0 * k as f64,
        }));
        columns.extend((0..4).map(|_| ColumnFamily::Gaussian {
            mean: 0.0,
            std: 1.0,
        }));
        Self {
            columns,
            prevalence: 0.05,
            active_columns: 10,
            signal: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Config("synthetic task needs columns".into()));
        }
        for c in &self.columns {
            c.validate()?;
        }
        if !(self.prevalence > 0.0 && self.prevalence <= 0.5) {
            return Err(Error::Config(format!(
                "prevalence {} not in (0, 0.5]",
                self.prevalence
            )));
        }
        if self.active_columns == 0 || self.active_columns > self.columns.len() {
            return Err(Error::Config(format!(
                "active_columns {} not in 1..={}",
                self.active_columns,
                self.columns.len()
            )));
        }
        if !(self.signal >= 0.0) || !self.signal.is_finite() {
            return Err(Error::Config(format!("signal {} must be ≥ 0", self.signal)));
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| format!("f{j:02}_{}", c.name()))
            .collect()
    }

    fn sample_columns(&self, n: usize, stream_seed: u64) -> Result<Vec<Vec<f64>>> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mut rng = seeded(derive_seed(stream_seed, COLUMN_STREAM + j as u64));
                c.sample(n, &mut rng)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Linear,
    /// `z² − 1`
    Quadratic,
    /// `σ(4(z − c))`
    Step { center: f64 },
    /// `exp(−(z − c)²)`
    Bump { center: f64 },
}

impl Transform {
    fn apply(&self, z: f64) -> f64 {
        match *self {
            Transform::Linear => z,
            Transform::Quadratic => z * z - 1.0,
            Transform::Step { center } => sigmoid(4.0 * (z - center)),
            Transform::Bump { center } => (-(z - center) * (z - center)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTerm {
    pub column: usize,
    pub transform: Transform,
    pub weight: f64,
    mean: f64,
    std: f64,
}

impl LabelTerm {
    fn eval(&self, x: f64) -> f64 {
        // soft clip keeps heavy tails from dominating the logit
        let z = 3.0 * ((x - self.mean) / self.std / 3.0).tanh();
        self.weight * self.transform.apply(z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub terms: Vec<LabelTerm>,
    pub intercept: f64,
}

impl LabelModel {
    /// Draws the label-model structure from the task seed and calibrates the
    /// intercept on a fixed calibration sample, so the model depends on the
    /// task spec alone (not on how many rows are generated).
    pub fn build(spec: &SyntheticTaskSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded(derive_seed(spec.seed, MODEL_STREAM));
        let mut cols: Vec<usize> = (0..spec.columns.len()).collect();
        cols.shuffle(&mut rng);
        cols.truncate(spec.active_columns);
        cols.sort_unstable();
        let terms = cols
            .into_iter()
            .map(|column| {
                let transform = match rng.random_range(0..4u8) {
                    0 => Transform::Linear,
                    1 => Transform::Quadratic,
                    2 => Transform::Step {
                        center: rng.random_range(-1.0..1.0),
                    },
                    _ => Transform::Bump {
                        center: rng.random_range(-1.0..1.0),
                    },
                };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let weight = sign * spec.signal * rng.random_range(0.5..1.5);
                let fam = spec.columns[column];
                LabelTerm {
                    column,
                    transform,
                    weight,
                    mean: fam.mean(),
                    std: fam.std(),
                }
            })
            .collect();
        let mut model = Self {
            terms,
            intercept: 0.0,
        };
        let calib = spec.sample_columns(
            CALIBRATION_ROWS,
            derive_seed(spec.seed, CALIBRATION_STREAM),
        )?;
        let scores: Vec<f64> = (0..CALIBRATION_ROWS)
            .map(|r| model.score(|j| calib[j][r]))
            .collect();
        model.intercept = calibrate_intercept(&scores, spec.prevalence);
        Ok(model)
    }

    fn score(&self, value: impl Fn(usize) -> f64) -> f64 {
        self.terms.iter().map(|t| t.eval(value(t.column))).sum()
    }

    /// True `p(y = 1 | x)` for one row of raw column values.
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.score(|j| row[j]) + self.intercept)
    }
}

/// Intercept `b` with `mean(σ(s_i + b)) = target`, by bisection.
fn calibrate_intercept(scores: &[f64], target: f64) -> f64 {
    let mean_p = |b: f64| scores.iter().map(|&s| sigmoid(s + b)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Rows carry a time column `t` equal to the row index.
    pub dataset: Dataset,
    /// True conditional probability per row.
    pub oracle: Vec<f64>,
    pub label_model: LabelModel,
}

/// Generates `n_rows` rows. Each column uses its own seed stream, labels
/// another; the same spec and row count always give the same data.
pub fn synth_generate(spec: &SyntheticTaskSpec, n_rows: usize) -> Result<SyntheticData> {
    let label_model = LabelModel::build(spec)?;
    let columns = spec.sample_columns(n_rows, spec.seed)?;
    let d = columns.len();
    let mut features = Vec::with_capacity(n_rows * d);
    let mut oracle = Vec::with_capacity(n_rows);
    let mut row = vec![0.0; d];
    for r in 0..n_rows {
        for j in 0..d {
            row[j] = columns[j][r];
        }
        features.extend_from_slice(&row);
        oracle.push(label_model.probability(&row));
    }
    let mut label_rng: Rng64 = seeded(derive_seed(spec.seed, LABEL_STREAM));
    let labels = oracle
        .iter()
        .map(|&p| if label_rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect();
    let dataset = Dataset {
        feature_names: spec.column_names(),
        features: Batch::new(n_rows, d, features)?,
        missing: None,
        categorical_names: Vec::new(),
        categorical: Vec::new(),
        label_name: "label".into(),
        labels,
        time_name: Some("t".into()),
        time: Some((0..n_rows).map(|r| r as f64).collect()),
    };
    Ok(SyntheticData {
        dataset,
        oracle,
        label_model,
    })
}

/// KS/AUC of the true probability used as the score: the ceiling a learned
/// model can reach in expectation.
pub fn bayes_metrics(oracle_probs: &[f64], labels: &[f64]) -> Result<MetricReport> {
    evaluate(oracle_probs, labels)
}
