use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::MaterialParams;
use crate::solver::SolverConfig;

use super::IoError;

/// Contents of `config.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub material: MaterialParams,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), IoError> {
        self.solver.validate().map_err(IoError::Config)?;
        self.material.validate().map_err(IoError::Config)
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig, IoError> {
    RunConfig::from_json(&fs::read_to_string(path).map_err(IoError::at(path))?)
}

pub fn write_config(path: &Path, config: &RunConfig) -> Result<(), IoError> {
    fs::write(path, config.to_json()).map_err(IoError::at(path))
}
