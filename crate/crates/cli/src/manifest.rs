//! Run manifests and atomic result writing.
//!
//! Every command that produces result files drops a `*.manifest.json` next
//! to them recording the exact invocation, the seed, a config snapshot, and
//! a SHA-256 of each output. Commands are deterministic under their seed,
//! so re-running the recorded invocation reproduces the checksums
//! bit-exactly.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// The argv that produced these outputs.
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Command-specific parameter snapshot.
    pub config: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(seed: Option<u64>, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "aontmesh",
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            seed,
            config,
            outputs: Vec::new(),
        }
    }

    /// Writes `bytes` to `path` atomically and records it in the manifest.
    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(OutputRecord {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes the manifest itself as `<primary output>.manifest.json`.
    pub fn finish(&self, primary_output: &Path) -> io::Result<PathBuf> {
        let mut name = primary_output.file_name().unwrap_or_default().to_owned();
        name.push(".manifest.json");
        let path = primary_output.with_file_name(name);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write-to-temp-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_owned();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
