//! JSON model and configuration files.
//!
//! A model file is an object with a `format_version`, a `model_type` of
//! `additive` or `lag`, and the fitted parameters. Floats are written in
//! shortest round-trip form, so reloading reproduces every parameter exactly.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::baseline::{FittedLagModel, LagModelConfig};
use crate::error::{Error, Result};
use crate::forecaster::{FittedForecaster, ForecasterConfig};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagModelFile {
    pub config: LagModelConfig,
    pub model: FittedLagModel,
    /// Last training date; forecasts start the day after.
    pub last_date: NaiveDate,
    /// The final `T_x` training values, oldest first.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "lowercase")]
pub enum SavedModel {
    Additive(Box<FittedForecaster>),
    Lag(LagModelFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: String,
    #[serde(flatten)]
    pub model: SavedModel,
}

impl ModelFile {
    pub fn new(model: SavedModel) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format_version {:?}, expected {FORMAT_VERSION:?}",
                file.format_version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Hyperparameters for one model family, as written by the tuner and read
/// back by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", content = "config", rename_all = "lowercase")]
pub enum ModelConfig {
    Additive(ForecasterConfig),
    Lag(LagModelConfig),
}

impl ModelConfig {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
