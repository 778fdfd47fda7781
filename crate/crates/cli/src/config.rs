//! Run configuration: one TOML document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tkgmlp::data::{ColumnFamily, CsvSchema, SyntheticTaskSpec};
use tkgmlp::encoders::{EncoderKind, DEFAULT_N_BINS};
use tkgmlp::model::ModelConfig;
use tkgmlp::trainer::{GridSpace, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpace>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synth,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Single CSV split chronologically by `fractions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Pre-split CSVs; `test` is optional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub ignore: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
}

fn default_fractions() -> [f64; 3] {
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]
}

fn default_label() -> String {
    "label".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthPreset {
    /// 32 columns, 8 per family, prevalence 0.47%.
    #[default]
    DeskTiny,
    /// Mostly zero-inflated counts, prevalence 5%.
    ZipHeavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default)]
    pub preset: SynthPreset,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prevalence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_columns: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<f64>,
    /// Replaces the preset's columns entirely.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<ColumnFamily>>,
}

fn default_rows() -> usize {
    300_000
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            preset: SynthPreset::default(),
            rows: default_rows(),
            prevalence: None,
            active_columns: None,
            signal: None,
            columns: None,
        }
    }
}

impl SynthConfig {
    pub fn task_spec(&self, seed: u64) -> SyntheticTaskSpec {
        let mut spec = match self.preset {
            SynthPreset::DeskTiny => SyntheticTaskSpec::desk_tiny(seed),
            SynthPreset::ZipHeavy => SyntheticTaskSpec::zip_heavy(seed),
        };
        if let Some(c) = &self.columns {
            spec.columns = c.clone();
            spec.active_columns = spec.active_columns.min(c.len());
        }
        if let Some(p) = self.prevalence {
            spec.prevalence = p;
        }
        if let Some(a) = self.active_columns {
            spec.active_columns = a;
        }
        if let Some(s) = self.signal {
            spec.signal = s;
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub n_bins: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            kind: EncoderKind::Qle,
            n_bins: DEFAULT_N_BINS,
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            label: self.label.clone(),
            time: self.time.clone(),
            categorical: self.categorical.clone(),
            ignore: self.ignore.clone(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.data.path,
            &mut self.data.train,
            &mut self.data.valid,
            &mut self.data.test,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let d = &self.data;
        match d.source {
            DataSource::Synth => {
                if d.path.is_some() || d.train.is_some() || d.valid.is_some() || d.test.is_some() {
                    return bad("synthetic data takes no file paths".into());
                }
                let synth = d.synth.clone().unwrap_or_default();
                synth
                    .task_spec(self.seed)
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                if synth.rows < 10 {
                    return bad(format!("synth.rows = {} is too small", synth.rows));
                }
            }
            DataSource::Csv => {
                if d.synth.is_some() {
                    return bad("[data.synth] only applies to source = \"synth\"".into());
                }
                match (&d.path, &d.train, &d.valid) {
                    (Some(_), None, None) if d.test.is_none() => {}
                    (None, Some(_), Some(_)) => {}
                    _ => {
                        return bad(
                            "csv data needs either `path` or both `train` and `valid`".into(),
                        )
                    }
                }
            }
        }
        if d.fractions.iter().any(|f| !(*f > 0.0)) || d.fractions.iter().sum::<f64>() > 1.0 + 1e-9
        {
            return bad(format!("fractions {:?} must be positive and sum to ≤ 1", d.fractions));
        }
        if self.encoder.n_bins == 0 {
            return bad("encoder.n_bins must be at least 1".into());
        }
        if self.model.input_dim != 0 {
            return bad("model.input_dim is derived from the encoder; leave it unset".into());
        }
        let mut probe = self.model.clone();
        probe.input_dim = 1;
        probe.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(g) = &self.grid {
            if g.is_empty() {
                return bad("grid space has an empty candidate list".into());
            }
        }
        Ok(())
    }

    /// Settings actually used by a run: the top-level seed drives training.
    pub fn effective_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}
