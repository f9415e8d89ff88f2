use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::HarnessConfig;
use crate::experiment::ExperimentSpec;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Run record. The timestamp is the only field that differs between
/// otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub model_id: String,
    pub train_domain: String,
    pub test_domain: String,
    pub seed: u64,
    pub scale: String,
    pub config_hash: String,
    pub created_unix: u64,
    /// False until every artifact has been written.
    pub valid: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub training_pairs: Option<usize>,
    pub artifacts: Vec<String>,
    pub config: HarnessConfig,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec, cfg: &HarnessConfig) -> Self {
        Manifest {
            schema_version: 1,
            model_id: spec.model.to_string(),
            train_domain: spec.train_domain.to_string(),
            test_domain: spec.test_domain.to_string(),
            seed: spec.seed,
            scale: spec.scale.to_string(),
            config_hash: cfg.hash(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            valid: false,
            failed_stage: None,
            error: None,
            training_pairs: None,
            artifacts: Vec::new(),
            config: cfg.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join(MANIFEST_FILE), json)
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}
