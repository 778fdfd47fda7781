use std::path::Path;

use serde::{Deserialize, Serialize};
use tkgmlp::nn::Parameters;
use tkgmlp::trainer::EpochRecord;
use tkgmlp::{FeatureEncoder, TkgmlpModel};

use crate::config::RunConfig;
use crate::CliError;

pub const FORMAT: &str = "tkgmlp-checkpoint";
pub const VERSION: u32 = 1;

/// Everything needed to score new rows: the fitted encoder, the trained
/// weights and the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    pub encoder: FeatureEncoder,
    pub model: TkgmlpModel,
    pub best_epoch: usize,
    pub best_valid_ks: f64,
    pub best_valid_auc: f64,
    pub history: Vec<EpochRecord>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Checkpoint(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Checkpoint(m);
        // Check the envelope first so a version mismatch gets a clear message
        // instead of a field-level decode error.
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let format = raw.get("format").and_then(|v| v.as_str());
        if format != Some(FORMAT) {
            return Err(bad(format!("not a {FORMAT} file (format = {format:?})")));
        }
        let version = raw.get("version").and_then(|v| v.as_u64());
        if version != Some(VERSION as u64) {
            return Err(bad(format!(
                "unsupported checkpoint version {version:?}, expected {VERSION}"
            )));
        }
        let mut ck: Checkpoint = serde_json::from_value(raw).map_err(|e| bad(e.to_string()))?;
        ck.model.zero_grad();
        if ck.model.input_dim() != ck.encoder.output_dim() {
            return Err(bad(format!(
                "model expects {} inputs but encoder produces {}",
                ck.model.input_dim(),
                ck.encoder.output_dim()
            )));
        }
        Ok(ck)
    }
}
