//! Run manifests: each invocation writes `manifest.json` into the output
//! directory with the echoed config, the effective seed, and a SHA-256
//! digest of every file it produced, enough to reproduce and verify the
//! run.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Serialize)]
struct ManifestFile {
    file: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
    config: &'a serde_json::Value,
    outputs: Vec<ManifestFile>,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    config: serde_json::Value,
    out_dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(
        command: &str,
        seed: u64,
        config: &C,
        out_dir: &Path,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(out_dir)?;
        Ok(ManifestBuilder {
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Writes a produced file under the output directory and records it.
    pub fn write_output(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    /// Records a file written through some other channel.
    pub fn record_output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn finish(self) -> Result<(), CliError> {
        let outputs = self
            .outputs
            .iter()
            .map(|path| -> Result<ManifestFile, CliError> {
                let bytes = std::fs::read(path)?;
                let mut hasher = Sha256::new();
                hasher.update(&bytes);
                let digest = hasher.finalize();
                Ok(ManifestFile {
                    file: path
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
                    bytes: bytes.len() as u64,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = Manifest {
            schema_version: 1,
            command: &self.command,
            seed: self.seed,
            config: &self.config,
            outputs,
        };
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(self.out_dir.join("manifest.json"), text)?;
        Ok(())
    }
}
