use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ResourceDigest {
    pub name: String,
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StageRecord {
    pub name: String,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub resources: Vec<ResourceDigest>,
    pub stages: Vec<StageRecord>,
}

pub fn digest_file(name: &str, path: &Path) -> Result<ResourceDigest, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(ResourceDigest {
        name: name.to_string(),
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig, resources: Vec<ResourceDigest>) -> Self {
        RunManifest {
            tool: "normlens",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            resources,
            stages: Vec::new(),
        }
    }

    pub fn record(&mut self, name: &str, started: Instant, outputs: Vec<String>) {
        self.stages.push(StageRecord {
            name: name.to_string(),
            outputs,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        });
    }
}
