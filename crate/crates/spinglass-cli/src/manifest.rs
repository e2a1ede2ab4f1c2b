//! Run manifests: the provenance record written next to every result file.
//!
//! A manifest pins everything needed to reproduce a run — the subcommand,
//! SHA-256 digests of all input files, the resolved parameters, the seed,
//! and the tool version.  Rerunning with the same inputs and parameters
//! reproduces the result file byte for byte; the wall time is the one field
//! that may differ, which is why it lives here and not in the result.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// Subcommand path, e.g. `railway compile`.
    pub command: String,
    /// `path → sha256:<hex>` for every input file the run read.
    pub inputs: BTreeMap<String, String>,
    /// Resolved parameters, defaults included.
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_ms: u64,
}

pub struct ManifestBuilder {
    command: String,
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            seed: None,
            started: Instant::now(),
        }
    }

    /// Record an input file's digest; call once per file actually read.
    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs
            .insert(path.display().to_string(), format!("sha256:{digest:x}"));
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn finish(self, parameters: serde_json::Value) -> RunManifest {
        RunManifest {
            command: self.command,
            inputs: self.inputs,
            parameters,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_ms: self.started.elapsed().as_millis() as u64,
        }
    }
}

/// Write `value` as pretty JSON with a trailing newline — the one canonical
/// serialization used for every artifact, so reruns are byte-identical.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    text
}

/// Write a result file and its sibling `<path>.manifest.json`.
pub fn write_result(
    path: &Path,
    result_json: &str,
    manifest: RunManifest,
) -> Result<(), CliError> {
    std::fs::write(path, result_json)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let manifest_path = sibling_manifest_path(path);
    std::fs::write(&manifest_path, to_canonical_json(&manifest))
        .map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
    Ok(())
}

pub fn sibling_manifest_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
