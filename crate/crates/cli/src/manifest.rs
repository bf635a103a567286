//! Run manifests: provenance for every set of output files.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// SHA-256 of the effective configuration (after command-line
    /// overrides), hex-encoded. Identical configurations hash identically.
    pub config_fingerprint: String,
    pub artifact_version: String,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// Content hash of a serializable configuration.
pub fn fingerprint<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339()
}
