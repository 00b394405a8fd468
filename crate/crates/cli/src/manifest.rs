//! Run manifests: what was run, with which inputs, producing which files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::run::{run_parsed, RunOptions};

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: serde_json::Value,
    pub threads: usize,
    pub wall_time_s: f64,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the manifest's directory.
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    /// Writes `manifest.json` through a temporary file and a rename.
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_NAME);
        let tmp = dir.join(format!(".{MANIFEST_NAME}.tmp"));
        let mut s = serde_json::to_string_pretty(self).expect("serializable manifest");
        s.push('\n');
        fs::write(&tmp, s).map_err(CliError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(CliError::io(&path))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::MissingArtifact(vec![path.display().to_string()])
            } else {
                CliError::Io {
                    path: path.to_path_buf(),
                    source: e,
                }
            }
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("manifest: {e}")))
    }
}

/// Outcome of a successful verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub checked: usize,
    pub rerun: bool,
}

/// Recomputes the checksums of every output; with `rerun`, also repeats the
/// run in a scratch directory and compares its outputs.
pub fn verify(manifest_path: &Path, rerun: bool) -> Result<VerifyReport, CliError> {
    let m = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut missing = Vec::new();
    let mut mismatched = Vec::new();
    for o in &m.outputs {
        let path = dir.join(&o.path);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == o.sha256 => {}
            Ok(_) => mismatched.push(o.path.clone()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing.push(o.path.clone()),
            Err(e) => return Err(CliError::Io { path, source: e }),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::MissingArtifact(missing));
    }
    if !mismatched.is_empty() {
        return Err(CliError::ChecksumMismatch(mismatched));
    }
    if rerun {
        rerun_and_compare(&m, dir)?;
    }
    Ok(VerifyReport {
        checked: m.outputs.len(),
        rerun,
    })
}

fn rerun_and_compare(m: &RunManifest, dir: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string(&m.config).expect("serializable config");
    let (cfg, value) = ExperimentConfig::parse(&text)?;
    let scratch = dir.join(".verify-rerun");
    let opts = RunOptions {
        command: m.command,
        config: PathBuf::from("<manifest>"),
        order_db: None,
        out: Some(scratch.clone()),
        threads: Some(m.threads),
    };
    let digest = FileDigest {
        path: "<manifest>".into(),
        sha256: sha256_hex(text.as_bytes()),
    };
    let result = run_parsed(&opts, &cfg, value, digest, &scratch);
    let _ = fs::remove_dir_all(&scratch);
    let again = result?;
    let differing: Vec<String> = m
        .outputs
        .iter()
        .filter(|o| !again.outputs.contains(o))
        .map(|o| o.path.clone())
        .collect();
    if differing.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksumMismatch(differing))
    }
}
