//! Datasets: CSV ingestion, chronological splits and synthetic generation.

mod csv_io;
mod split;
pub mod synth;

pub use csv_io::{load_csv, write_csv, CsvSchema};
pub use split::chronological_split;
pub use synth::{
    bayes_metrics, synth_generate, ColumnFamily, LabelModel, SyntheticData, SyntheticTaskSpec,
};

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::nn::loss::check_labels;

/// A labelled table. Numerical features live in `features`; cells that were
/// missing in the source hold 0.0 and are flagged in `missing` so encoders
/// can impute them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub features: Batch,
    /// Row-major `rows × features` mask; `None` when nothing is missing.
    pub missing: Option<Vec<bool>>,
    pub categorical_names: Vec<String>,
    /// One vector of raw strings per categorical column.
    pub categorical: Vec<Vec<String>>,
    pub label_name: String,
    pub labels: Vec<f64>,
    pub time_name: Option<String>,
    pub time: Option<Vec<f64>>,
}

impl Dataset {
    /// Numerical-only dataset.
    pub fn from_features(
        feature_names: Vec<String>,
        features: Batch,
        labels: Vec<f64>,
    ) -> Result<Self> {
        let ds = Self {
            feature_names,
            features,
            missing: None,
            categorical_names: Vec::new(),
            categorical: Vec::new(),
            label_name: "label".into(),
            labels,
            time_name: None,
            time: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.features.rows() != n {
            return Err(Error::Shape(format!(
                "{} feature rows vs {n} labels",
                self.features.rows()
            )));
        }
        if self.feature_names.len() != self.features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                self.feature_names.len(),
                self.features.cols()
            )));
        }
        if let Some(m) = &self.missing {
            if m.len() != self.features.data().len() {
                return Err(Error::Shape("missing mask size".into()));
            }
        }
        if self.categorical.len() != self.categorical_names.len()
            || self.categorical.iter().any(|c| c.len() != n)
        {
            return Err(Error::Shape("categorical columns".into()));
        }
        if let Some(t) = &self.time {
            if t.len() != n {
                return Err(Error::Shape("time column length".into()));
            }
        }
        check_labels(&self.labels)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing
            .as_ref()
            .is_some_and(|m| m[row * self.features.cols() + col])
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1.0).count()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let cols = self.features.cols();
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(idx),
            missing: self.missing.as_ref().map(|m| {
                idx.iter()
                    .flat_map(|&r| m[r * cols..(r + 1) * cols].iter().copied())
                    .collect()
            }),
            categorical_names: self.categorical_names.clone(),
            categorical: self
                .categorical
                .iter()
                .map(|c| idx.iter().map(|&r| c[r].clone()).collect())
                .collect(),
            label_name: self.label_name.clone(),
            labels: idx.iter().map(|&r| self.labels[r]).collect(),
            time_name: self.time_name.clone(),
            time: self
                .time
                .as_ref()
                .map(|t| idx.iter().map(|&r| t[r]).collect()),
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        let idx: Vec<usize> = range.collect();
        self.select_rows(&idx)
    }
}
