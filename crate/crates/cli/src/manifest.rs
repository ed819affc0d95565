//! Per-stage output manifests.
//!
//! Each stage writes `stage_manifest.json` next to its outputs: the stage
//! name, the configuration fingerprint, the seed, the hashes of the upstream
//! manifests it consumed and the hash of every file it wrote. No timestamps
//! are recorded, so identical inputs give byte-identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "stage_manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub config_fingerprint: String,
    pub seed: u64,
    /// Upstream stage name to the hash of its manifest.
    pub inputs: BTreeMap<String, String>,
    /// Path relative to the stage directory to file hash.
    pub outputs: BTreeMap<String, String>,
}

impl StageManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    Ok(sha256_hex(&bytes))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    for entry in std::fs::read_dir(dir).map_err(CliError::io(dir))? {
        let path = entry.map_err(CliError::io(dir))?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Hashes every file under `dir` except the manifest itself, keyed by
/// `/`-separated relative path.
pub fn hash_tree(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files)?;
    let mut out = BTreeMap::new();
    for path in files {
        let rel = path.strip_prefix(dir).expect("file lies under dir");
        let key = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        if key == MANIFEST_FILE {
            continue;
        }
        out.insert(key, hash_file(&path)?);
    }
    Ok(out)
}
