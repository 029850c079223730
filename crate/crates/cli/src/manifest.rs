use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command invocation, written next to its artifacts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    /// File names relative to the manifest's directory.
    pub artifacts: Vec<String>,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: &RunConfig, seeds: Vec<u64>, started: DateTime<Utc>) -> Self {
        Self {
            command: command.to_owned(),
            argv: argv.to_vec(),
            config: config.clone(),
            seeds,
            artifacts: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: String::new(),
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<PathBuf, String> {
        self.finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).map_err(|e| e.to_string())?;
        fs::write(&path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        Ok(path)
    }
}
