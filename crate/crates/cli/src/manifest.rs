use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use eerd_core::export::write_atomic;
use eerd_core::forge::sha256_hex;

use crate::error::CliError;

pub const FILE: &str = "run_manifest.json";

/// Record of every completed stage. Rewritten atomically after each
/// command; all fields except `timings_ms` are deterministic for a given
/// config and seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    /// Stage name to artifact path (relative to the output dir) to SHA-256.
    pub stages: BTreeMap<String, BTreeMap<String, String>>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn load_or_new(out: &Path, config_hash: &str) -> Self {
        let existing = std::fs::read(out.join(FILE))
            .ok()
            .and_then(|b| serde_json::from_slice::<RunManifest>(&b).ok())
            .filter(|m| m.config_hash == config_hash);
        existing.unwrap_or_else(|| RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            ..RunManifest::default()
        })
    }

    /// Hashes `artifacts` (paths under `out`) and records them for `stage`.
    pub fn record(&mut self, out: &Path, stage: &str, artifacts: &[std::path::PathBuf], elapsed_ms: u64) -> Result<(), CliError> {
        let mut hashes = BTreeMap::new();
        for p in artifacts {
            let bytes = std::fs::read(p).map_err(|e| CliError::pipeline(p.display(), e))?;
            let rel = p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/");
            hashes.insert(rel, sha256_hex(&bytes));
        }
        self.stages.insert(stage.to_string(), hashes);
        self.timings_ms.insert(stage.to_string(), elapsed_ms);
        Ok(())
    }

    pub fn save(&self, out: &Path) -> Result<(), CliError> {
        let json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        write_atomic(&out.join(FILE), &json).map_err(|e| CliError::Pipeline(e.to_string()))
    }
}
