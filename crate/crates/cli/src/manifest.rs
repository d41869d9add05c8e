use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn from_bytes(path: &str, data: &[u8]) -> Self {
        Self { path: path.to_string(), sha256: hex::encode(Sha256::digest(data)), bytes: data.len() as u64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub wall_seconds: f64,
    pub steps: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn digest_of(&self, path: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.path == path).map(|a| a.sha256.as_str())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
