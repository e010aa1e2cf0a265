//! Run manifest: config echo, artifact list with content hashes, and a
//! per-command diagnostics summary. Written as `run_manifest.json` next to
//! the artifacts it describes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub exit_code: i32,
    /// Echo of the parsed configuration (TOML re-serialized), when the
    /// command is config-driven.
    pub config_echo: Option<String>,
    pub artifacts: Vec<ArtifactEntry>,
    /// Free-form per-command summary: fitted rates, reversal crossings,
    /// entropy flags, discrepancy-experiment results.
    pub diagnostics: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            exit_code: 0,
            config_echo: None,
            artifacts: Vec::new(),
            diagnostics: serde_json::Value::Null,
        }
    }

    /// Hash an already-written artifact and add it to the list.
    pub fn add_artifact(&mut self, dir: &Path, rel_path: &str) -> Result<()> {
        let full = dir.join(rel_path);
        let bytes = fs::read(&full)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.artifacts.push(ArtifactEntry {
            path: rel_path.to_string(),
            sha256: hex::encode(hasher.finalize()),
        });
        Ok(())
    }

    /// Write the manifest itself into `dir` and return its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        fs::write(&path, json)?;
        Ok(path)
    }
}

/// Re-read a manifest and confirm every listed artifact exists with a
/// matching hash.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest parse: {e}")))?;
    for entry in &manifest.artifacts {
        let bytes = fs::read(dir.join(&entry.path))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let actual = hex::encode(hasher.finalize());
        if actual != entry.sha256 {
            return Err(Error::Config(format!(
                "artifact {} hash mismatch: manifest {}, actual {actual}",
                entry.path, entry.sha256
            )));
        }
    }
    Ok(manifest)
}
