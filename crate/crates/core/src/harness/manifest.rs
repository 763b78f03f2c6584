//! Run manifest: config echo, checks and a checksummed file inventory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SceError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: value <= tolerance, value, tolerance, detail: format!("{value:e} <= {tolerance:e}") }
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: value >= tolerance, value, tolerance, detail: format!("{value:e} >= {tolerance:e}") }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, value: f64::from(u8::from(passed)), tolerance: 1.0, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: String,
    /// Resolved configuration, as TOML.
    pub config: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Error that ended the run early, if any.
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| SceError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SceError::Parse(format!("{}: {e}", path.display())))
    }

    /// Recomputes every checksum; returns the paths that are missing or differ.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| file_entry(dir, &dir.join(&f.path)).map_or(true, |g| g != **f))
            .map(|f| f.path.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_entry(root: &Path, path: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).map_err(|e| SceError::Io(format!("{}: {e}", path.display())))?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(FileEntry { path: rel.to_string_lossy().replace('\\', "/"), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| SceError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Inventories `files`, then writes the manifest atomically into `dir`.
pub fn finish_manifest(dir: &Path, mut manifest: RunManifest, files: &[PathBuf]) -> Result<RunManifest> {
    let mut sorted = files.to_vec();
    sorted.sort();
    sorted.dedup();
    manifest.files = sorted.iter().map(|p| file_entry(dir, p)).collect::<Result<Vec<_>>>()?;
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| SceError::Io(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}
