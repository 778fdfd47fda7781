//! Hybrid KAN + gated-MLP network for imbalanced tabular binary
//! classification, with quantile-based feature encoders, KS/AUC metrics,
//! a training loop and synthetic benchmark data.
//!
//! Pipeline: [`data`] → [`encoders`] → [`model`] trained by [`trainer`],
//! scored with [`metrics`].

pub mod batch;
pub mod data;
pub mod encoders;
pub mod error;
pub mod gmlp;
pub mod kan;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod rng;
pub mod spline;
pub mod trainer;

pub use batch::{Batch, Mode};
pub use data::{chronological_split, load_csv, synth_generate, Dataset, SyntheticTaskSpec};
pub use encoders::{EncoderKind, FeatureEncoder};
pub use error::{Error, Result};
pub use metrics::{evaluate, MetricReport};
pub use model::{ModelConfig, TkgmlpModel};
pub use trainer::{train, GridSpace, TrainConfig, TrainOutcome};
