//! Run manifests: enough provenance to re-run any artifact-producing command
//! bit-identically (same config, same data, same seeds).

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    /// The fully resolved configuration (defaults materialized).
    pub config: serde_json::Value,
    pub config_digest: String,
    pub dataset_digests: Vec<FileDigest>,
    pub base_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

impl RunManifest {
    pub fn begin<C: Serialize>(
        command: &str,
        config: &C,
        data_paths: &[PathBuf],
        base_seed: u64,
    ) -> Result<Self, CliError> {
        let config = serde_json::to_value(config)
            .map_err(|e| CliError::Other(format!("manifest config: {e}")))?;
        let config_digest = sha256_hex(config.to_string().as_bytes());
        let dataset_digests = data_paths
            .iter()
            .map(|p| digest_file(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunManifest {
            command: command.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            config_digest,
            dataset_digests,
            base_seed,
            started_unix: now_unix(),
            finished_unix: 0,
        })
    }

    /// Stamp the finish time and write `run_manifest.json` into `out_dir`.
    pub fn finish(mut self, out_dir: &Path) -> Result<(), CliError> {
        self.finished_unix = now_unix();
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Other(format!("cannot create {}: {e}", out_dir.display())))?;
        let path = out_dir.join("run_manifest.json");
        let json = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::Other(format!("manifest: {e}")))?;
        std::fs::write(&path, json + "\n")
            .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
