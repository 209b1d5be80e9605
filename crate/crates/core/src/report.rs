//! Run manifests and report documents written by the command-line tool.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sim::{ModeComparisonReport, SimResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub inputs: Vec<InputFile>,
    /// Builtin species replaced by a species file.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overridden_species: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub added_species: Vec<String>,
    pub mode: Option<String>,
    pub species: Option<String>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            tool: "omg".into(),
            tool_version: TOOL_VERSION.into(),
            inputs: Vec::new(),
            overridden_species: Vec::new(),
            added_species: Vec::new(),
            mode: None,
            species: None,
            seed: None,
            shots: None,
        }
    }
}

impl RunManifest {
    /// Record an input whose contents were already read.
    pub fn add_input(&mut self, role: &str, path: &Path, contents: &[u8]) {
        self.inputs.push(InputFile {
            role: role.into(),
            path: path.display().to_string(),
            sha256: sha256_hex(contents),
        });
    }

    /// Inputs whose current on-disk hash differs from the recorded one.
    pub fn stale_inputs(&self) -> Vec<&InputFile> {
        self.inputs
            .iter()
            .filter(|f| std::fs::read(&f.path).map(|b| sha256_hex(&b)).ok().as_deref() != Some(f.sha256.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub manifest: RunManifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
    pub protection: String,
    pub duration_s: f64,
    pub result: SimResult,
    /// Noiseless outcome law, present when the register fits the exact simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_distribution: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDocument {
    pub manifest: RunManifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
    pub fidelity_metric: String,
    pub comparison: ModeComparisonReport,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
