//! Run manifests.
//!
//! Every run drops a `manifest.json` next to its outputs recording the tool
//! version, the exact argument vector, a digest of the fully resolved
//! configuration, and the seeds in play. Timestamps are `null` unless the
//! caller passes `--stamp`, because a rerun with identical inputs must be
//! byte-identical — wall-clock times would break that for no forensic gain
//! (the stamp is there when an audit trail matters more than bitwise
//! reproducibility).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::formats::write_atomic;

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeedRecord {
    /// The root seed every stream derives from.
    pub root: u64,
    /// Named derivation streams consumed by this run.
    pub streams: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Timestamps {
    pub start: Option<String>,
    pub end: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Vec<String>,
    pub config_hash: String,
    pub seeds: SeedRecord,
    pub timestamps: Timestamps,
}

impl RunManifest {
    pub fn new(
        argv: Vec<String>,
        config: &impl Serialize,
        root_seed: u64,
        streams: &[&str],
        stamp: Option<&str>,
    ) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: argv,
            config_hash: config_digest(config),
            seeds: SeedRecord {
                root: root_seed,
                streams: streams.iter().map(|s| s.to_string()).collect(),
            },
            timestamps: Timestamps {
                start: stamp.map(|s| s.to_string()),
                end: stamp.map(|s| s.to_string()),
            },
        }
    }

    /// Write `manifest.json` into `dir` atomically.
    pub fn write_into(&self, dir: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        write_atomic(&dir.join("manifest.json"), &body)
    }
}

/// SHA-256 over the canonical JSON form of the resolved configuration.
pub fn config_digest(config: &impl Serialize) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    let hex: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}
