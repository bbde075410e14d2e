//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{Decay, ExpansionParams, DEFAULT_BUDGET};
use crate::graphunits::EdgeMode;
use crate::interest::{EdgeInterestSpec, NodeInterestSpec};
use crate::propagation::{Aggregator, PropagationParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Everything a pipeline run needs. Defaults: h=5, k=0.7, mean blend,
/// exponential decay, constant node interest 1.0, fraud/time-weighted edge interest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transactions: Option<PathBuf>,
    pub seeds: Vec<String>,
    pub h: usize,
    pub k: f64,
    pub gamma: Aggregator,
    pub theta: Decay,
    pub edge_mode: EdgeMode,
    pub budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_path_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub vudie: NodeInterestSpec,
    pub ludie: EdgeInterestSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nodes: None,
            transactions: None,
            seeds: Vec::new(),
            h: 5,
            k: 0.7,
            gamma: Aggregator::MeanBlend,
            theta: Decay::Exponential,
            edge_mode: EdgeMode::Induced,
            budget: DEFAULT_BUDGET,
            max_path_length: None,
            threads: None,
            out: None,
            vudie: NodeInterestSpec::default(),
            ludie: EdgeInterestSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.k) {
            return Err(ConfigError::Invalid(format!("k = {} must lie in [0, 1]", self.k)));
        }
        if self.budget == 0 {
            return Err(ConfigError::Invalid("budget must be positive".into()));
        }
        if self.max_path_length == Some(0) {
            return Err(ConfigError::Invalid("max_path_length must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid("threads must be positive".into()));
        }
        self.vudie
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("vudie: {e}")))?;
        self.ludie
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("ludie: {e}")))?;
        Ok(())
    }

    pub fn propagation(&self) -> PropagationParams {
        PropagationParams {
            hops: self.h,
            aggregator: self.gamma,
        }
    }

    pub fn expansion<S: crate::Scalar>(&self) -> ExpansionParams<S> {
        ExpansionParams {
            threshold: S::of(self.k),
            decay: self.theta,
            max_path_length: self.max_path_length,
            budget: self.budget,
        }
    }

    /// Template written by `init-config`: every default spelled out.
    pub fn template() -> Self {
        RunConfig {
            nodes: Some(PathBuf::from("nodes.csv")),
            transactions: Some(PathBuf::from("transactions.csv")),
            seeds: vec!["C1".into()],
            out: Some(PathBuf::from("out")),
            ..RunConfig::default()
        }
    }
}
