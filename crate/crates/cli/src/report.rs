use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// A command result wrapped with the configuration that produced it and a
/// SHA-256 hash of both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Hex SHA-256 of the compact, key-sorted JSON of `[command, config, result]`.
    pub content_hash: String,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, config: &ExperimentConfig, result: T) -> Result<Self> {
        let content_hash = content_hash(command, config, &result)?;
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            content_hash,
            result,
        })
    }

    /// True when the stored hash matches the content.
    pub fn verify_hash(&self) -> Result<bool> {
        Ok(content_hash(&self.command, &self.config, &self.result)? == self.content_hash)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn content_hash<T: Serialize>(command: &str, config: &ExperimentConfig, result: &T) -> Result<String> {
    let canonical = serde_json::to_value((command, config, result))?;
    let bytes = serde_json::to_vec(&canonical)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// CSV text with a header row.
pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(e.to_string()))
}

/// Writes `text` to `path`, or to stdout without a path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
