//! Session settings from a file: a flat JSON object or `key = value` lines
//! (`#` starts a comment). Keys mirror [`SessionConfig`]; unknown keys are
//! rejected so typos do not pass silently.

use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use serde_json::{Map, Value};
use vtt_core::{BandMeasure, SessionConfig, StrategyKind};

use crate::error::{Result, VttError};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub strategy: Option<String>,
    pub max_questions: Option<usize>,
    pub uncertainty_stop: Option<f64>,
    pub epsilon: Option<f64>,
    pub length_scale: Option<f64>,
    pub signal_variance: Option<f64>,
    pub noise_variance: Option<f64>,
    pub seed: Option<u64>,
    pub frequency_mode: Option<bool>,
    pub band_measure: Option<String>,
}

pub fn parse_band_measure(text: &str) -> Result<BandMeasure> {
    match text {
        "std" | "stddev" => Ok(BandMeasure::StdDev),
        "variance" | "var" => Ok(BandMeasure::Variance),
        other => Err(VttError::Config(format!(
            "unknown band measure `{other}` (expected std or variance)"
        ))),
    }
}

impl ConfigFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| VttError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| VttError::Config(e.to_string()))?
        } else {
            key_value_object(text)?
        };
        serde_json::from_value(value).map_err(|e| VttError::Config(e.to_string()))
    }

    /// Overwrites the fields of `config` that this file sets.
    pub fn apply(&self, config: &mut SessionConfig) -> Result<()> {
        if let Some(s) = &self.strategy {
            config.strategy = StrategyKind::from_str(s)?;
        }
        if let Some(v) = self.max_questions {
            config.max_questions = v;
        }
        if let Some(v) = self.uncertainty_stop {
            config.uncertainty_stop = Some(v);
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.length_scale {
            config.kernel.length_scale = v;
        }
        if let Some(v) = self.signal_variance {
            config.kernel.signal_variance = v;
        }
        if let Some(v) = self.noise_variance {
            config.kernel.noise_variance = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.frequency_mode {
            config.frequency_mode = v;
        }
        if let Some(m) = &self.band_measure {
            config.band_measure = parse_band_measure(m)?;
        }
        Ok(())
    }
}

/// Values are read as JSON scalars when they parse as such, strings otherwise.
fn key_value_object(text: &str) -> Result<Value> {
    let mut map = Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| VttError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let parsed = serde_json::from_str::<Value>(value)
            .ok()
            .filter(|v| !v.is_object() && !v.is_array())
            .unwrap_or_else(|| Value::String(value.to_owned()));
        if map.insert(key.to_owned(), parsed).is_some() {
            return Err(VttError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(Value::Object(map))
}
