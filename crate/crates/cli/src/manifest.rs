use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Provenance record written next to every sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_path: String,
    /// SHA-256 of the config file bytes, lowercase hex.
    pub config_sha256: String,
    /// Seed actually used; differs from `config_master_seed` after `--seed`.
    pub master_seed: u64,
    pub config_master_seed: u64,
    pub n_trials: u64,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }

    pub fn matches_config(&self, config_bytes: &[u8]) -> bool {
        self.config_sha256 == sha256_hex(config_bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
