//! Versioned experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use mixagg_core::aa::GameConfig;
use mixagg_core::synthetic::PoolSpec;
use mixagg_core::types::Distribution;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Where outcomes come from: the pool's latent truth, or a JSON array of
/// distributions (one per round) at a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum OutcomeStream {
    #[default]
    Synthetic,
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub game: GameConfig,
    pub expert_pool: PoolSpec,
    #[serde(default)]
    pub outcome_stream: OutcomeStream,
    /// Output directory, relative to the working directory.
    pub output: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// A parsed config with its outcome file (if any) already loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub outcomes: Option<Vec<Distribution>>,
}

impl ExperimentConfig {
    pub fn from_str(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
    }

    /// Reads, parses and validates a config file; nothing is written.
    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let origin = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let config = Self::from_str(&text, &origin)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let outcomes = config.validate(base)?;
        Ok(LoadedConfig { config, outcomes })
    }

    /// Checks every field; returns the outcome file contents for file streams.
    pub fn validate(&self, base: &Path) -> Result<Option<Vec<Distribution>>, CliError> {
        let field = |name: &str, e: &dyn std::fmt::Display| CliError::Config(format!("{name}: {e}"));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {CONFIG_SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        self.game.validate().map_err(|e| field("game", &e))?;
        self.expert_pool
            .validate(self.game.horizon)
            .map_err(|e| field("expert_pool", &e))?;
        if self.formats.is_empty() {
            return Err(CliError::Config(
                "formats: at least one of csv, json is required".into(),
            ));
        }
        match &self.outcome_stream {
            OutcomeStream::Synthetic => Ok(None),
            OutcomeStream::File { path } => {
                let full = base.join(path);
                let text = fs::read_to_string(&full)
                    .map_err(|e| field("outcome_stream.path", &format!("{}: {e}", full.display())))?;
                let outcomes: Vec<Distribution> = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", full.display(), e.line(), e.column())))?;
                if outcomes.len() < self.game.horizon {
                    return Err(field(
                        "outcome_stream.path",
                        &format!("{} outcomes for a horizon of {}", outcomes.len(), self.game.horizon),
                    ));
                }
                Ok(Some(outcomes))
            }
        }
    }
}
