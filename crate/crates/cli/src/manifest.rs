use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::FlatConfig;
use crate::error::{usage, CliError, CliResult};

/// Everything needed to rerun an experiment and check its statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub kind: String,
    /// Fully resolved configuration, defaults included.
    pub config: FlatConfig,
    pub seed: u64,
    /// The seed was drawn because `--seed auto` was given.
    pub seed_auto: bool,
    pub workers: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub stats: Value,
    /// SHA-256 of the compact JSON encoding of `stats`.
    pub stats_sha256: String,
}

pub fn stats_hash(stats: &Value) -> String {
    let bytes = serde_json::to_vec(stats).expect("stats serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("manifest {}: {e}", path.display())))
    }
}

/// Writes files in order; if any write fails, the ones already written are removed.
pub fn write_all(files: &[(PathBuf, String)]) -> CliResult<()> {
    let mut done: Vec<&Path> = Vec::new();
    for (path, body) in files {
        if let Err(e) = std::fs::write(path, body) {
            for p in done {
                let _ = std::fs::remove_file(p);
            }
            return Err(CliError::Io(format!("{}: {e}", path.display())));
        }
        done.push(path);
    }
    Ok(())
}
