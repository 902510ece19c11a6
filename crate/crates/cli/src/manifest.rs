use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub kind: String,
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub resolved_spec: Value,
    pub settings: Value,
    pub outputs: Vec<OutputEntry>,
    /// Seconds.
    pub wall_time: f64,
    pub version: String,
    /// Computed quantities worth keeping next to the CSVs.
    #[serde(default)]
    pub derived: Map<String, Value>,
    /// Sweep points that failed, with their error messages.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output files written into one directory.
pub struct OutputDir {
    pub dir: PathBuf,
    pub entries: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<OutputDir> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, kind: &str, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.entries.push(OutputEntry {
            kind: kind.to_string(),
            path: file.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_csv<F>(&mut self, kind: &str, file: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(CliError::io(self.dir.join(file)))?;
        self.write(kind, file, &buf)
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.outputs = self.entries;
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}

/// Re-hashes every listed output; returns the paths whose content changed or vanished.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(manifest
        .outputs
        .iter()
        .filter(|o| fs::read(dir.join(&o.path)).map_or(true, |b| sha256_hex(&b) != o.sha256))
        .map(|o| o.path.clone())
        .collect())
}
