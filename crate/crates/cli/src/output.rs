//! Run manifest and the single writer that puts a file set on disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    /// Unix seconds; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
    /// SHA-256 of each sampled axis (little-endian `f64` bytes).
    pub grid_hashes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            timestamp: timestamp(),
            grid_hashes: BTreeMap::new(),
        }
    }

    pub fn hash_axis(&mut self, name: &str, values: &[f64]) {
        self.grid_hashes.insert(name.to_string(), grid_hash(values));
    }
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
    {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn grid_hash(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// `{manifest, data}` as pretty JSON with a trailing newline.
pub fn json_document(manifest: &RunManifest, data: serde_json::Value) -> String {
    let doc = serde_json::json!({ "manifest": manifest, "data": data });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialise");
    s.push('\n');
    s
}

/// Files of one run, written together once everything has been computed.
#[derive(Default)]
pub struct FileSet {
    files: Vec<(String, String)>,
}

impl FileSet {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn write(self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        if self.files.is_empty() {
            return Ok(Vec::new());
        }
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        let a = grid_hash(&[0.0, 0.5, 1.0]);
        assert_eq!(a, grid_hash(&[0.0, 0.5, 1.0]));
        assert_ne!(a, grid_hash(&[0.0, 0.5, 1.0000000001]));
        assert_eq!(a.len(), 64);
    }
}
