//! CSV tables and JSON run summaries.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::ExperimentConfig;

/// Git-style content hash: SHA-256 of `"blob <len>\0" ++ bytes`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Writes `rows` with a header taken from the row type's field names.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// JSON record of a run: the config it was given, a hash of that config,
/// and the experiment's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub content_hash: String,
    /// Free-form notes, e.g. how samples were centered.
    pub metadata: BTreeMap<String, String>,
    pub results: serde_json::Value,
}

impl RunSummary {
    pub fn new<T: Serialize>(experiment: &str, config: &ExperimentConfig, results: &T) -> Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        Ok(RunSummary {
            experiment: experiment.to_string(),
            config: config.clone(),
            content_hash: content_hash(&canonical),
            metadata: BTreeMap::new(),
            results: serde_json::to_value(results)?,
        })
    }

    pub fn note(mut self, key: &str, value: &str) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Files produced by a CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: ExperimentConfig,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
    pub content_hash: String,
}
