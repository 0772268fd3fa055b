use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{ModelConfig, ModelParams};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Model configuration, the training configuration that produced it, and
/// every weight. Floats round-trip bit-exactly through the JSON encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, train: &TrainConfig) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            model: params.config,
            train: train.clone(),
            params: params.values.clone(),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        self.model.validate()?;
        let expected = self.model.parameter_count();
        if self.params.len() != expected {
            return Err(Error::Checkpoint(format!(
                "{} weights stored, model needs {expected}",
                self.params.len()
            )));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite weight".into()));
        }
        Ok(ModelParams {
            config: self.model,
            values: self.params.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {}",
                ckpt.format_version
            )));
        }
        ckpt.model_params()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(
    params: &ModelParams,
    train: &TrainConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut text = Checkpoint::new(params, train).to_json()?;
    text.push('\n');
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams, TrainConfig)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt = Checkpoint::from_json(&text)?;
    Ok((ckpt.model_params()?, ckpt.train))
}
