//! Output directory handling and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files produced by one command, kept in memory until written.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(fluxlattice::Error::from)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub command: String,
    /// SHA-256 of the resolved configuration as canonical JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub outputs: Vec<FileEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Versions {
    pub fluxlattice: String,
    pub fluxlattice_cli: String,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            fluxlattice: fluxlattice::VERSION.to_string(),
            fluxlattice_cli: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Hash of a serializable config; keys are emitted in struct order, so the
/// hash is stable for a given binary.
pub fn config_hash(config: &serde_json::Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}

/// Writes every artifact under `dir`, then the manifest listing them.
pub fn write_all(
    dir: &Path,
    command: &str,
    config: serde_json::Value,
    artifacts: &Artifacts,
    wall_time: Duration,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut outputs = Vec::new();
    for (name, contents) in &artifacts.files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        outputs.push(FileEntry {
            path: name.clone(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
    }
    let manifest = Manifest {
        schema: SCHEMA,
        command: command.to_string(),
        config_hash: config_hash(&config),
        config,
        versions: Versions::current(),
        wall_time_s: wall_time.as_secs_f64(),
        outputs,
    };
    let path = dir.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(fluxlattice::Error::from)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
