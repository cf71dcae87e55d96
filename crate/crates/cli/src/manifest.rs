use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{file_digest, sha256_hex, write_json};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub label: String,
    pub seed: u64,
}

/// Everything needed to rerun a command. The timestamp is the only field
/// that changes between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit: String,
    pub command: String,
    pub created_unix_s: u64,
    pub params_digest: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedRecord>,
    #[serde(default)]
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            toolkit: format!("quadcool {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            params_digest: params_digest(config),
            config: config.clone(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records a written file relative to the output directory.
    pub fn add_output(&mut self, dir: &Path, name: &str) -> Result<(), CliError> {
        let sha256 = file_digest(&dir.join(name))?;
        self.outputs.push(FileRecord { path: name.into(), sha256 });
        Ok(())
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = file_digest(path)?;
        self.inputs.push(FileRecord { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_json(&dir.join(MANIFEST_NAME), self)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// SHA-256 of the canonical JSON form of the physical system block.
pub fn params_digest(config: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(&config.system).expect("config serializes"))
}
