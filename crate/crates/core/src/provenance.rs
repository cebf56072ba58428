//! Content hashes and report metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub artifact_version: String,
    pub config_fingerprint: String,
    pub inputs: Vec<InputHash>,
}

impl ReportMetadata {
    pub fn new(config_fingerprint: String, inputs: Vec<InputHash>) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            config_fingerprint,
            inputs,
        }
    }
}

pub fn hash_inputs<'a>(inputs: impl IntoIterator<Item = (&'a str, &'a Path)>) -> Result<Vec<InputHash>> {
    inputs
        .into_iter()
        .map(|(role, path)| {
            Ok(InputHash {
                role: role.to_string(),
                path: path.display().to_string(),
                sha256: file_sha256(path)?,
            })
        })
        .collect()
}
