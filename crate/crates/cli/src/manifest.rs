//! Run manifests: the full config echo plus provenance fields, written
//! next to every artifact so outputs are reproducible from the manifest
//! and seeds alone.

use crate::config::ExperimentConfig;
use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub code_version: &'a str,
    /// Identity of the shared episode pipeline; equal across methods.
    pub pipeline_id: &'a str,
    /// SHA-256 of the canonical env-spec TOML.
    pub env_spec_hash: String,
    pub config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
}

pub fn env_spec_hash(cfg: &ExperimentConfig) -> String {
    let canonical = cfg.env.to_toml();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    checkpoint: Option<&Path>,
) -> Result<()> {
    let manifest = Manifest {
        command,
        code_version: env!("CARGO_PKG_VERSION"),
        pipeline_id: lumenav_core::agent::EPISODE_PIPELINE_ID,
        env_spec_hash: env_spec_hash(cfg),
        config: cfg,
        checkpoint: checkpoint.map(|p| p.display().to_string()),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}
