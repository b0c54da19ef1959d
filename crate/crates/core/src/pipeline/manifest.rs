use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, PipelineError, Stage};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    /// Hash over the stage's config slice and input hashes; a match means the
    /// stage can be skipped on resume.
    pub fingerprint: String,
    pub duration_ms: u64,
    /// Path → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Path relative to the output directory → SHA-256.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub prompt_version: String,
    pub tokenizer_version: String,
    pub model_format_version: u32,
    pub config: PipelineConfig,
    /// Latest record per stage, in pipeline order.
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config: &PipelineConfig) -> Self {
        RunManifest {
            tool_version: crate::VERSION.into(),
            prompt_version: crate::extraction::PROMPT_VERSION.into(),
            tokenizer_version: crate::topics::TOKENIZER_VERSION.into(),
            model_format_version: crate::topics::MODEL_FORMAT_VERSION,
            config: config.clone(),
            stages: Vec::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Option<Self>, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))
    }

    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    pub fn upsert(&mut self, record: StageRecord) {
        self.stages.retain(|r| r.stage != record.stage);
        self.stages.push(record);
        self.stages.sort_by_key(|r| r.stage);
    }

    /// Every output of every completed stage: relative path → hash.
    pub fn output_hashes(&self) -> BTreeMap<String, String> {
        self.stages
            .iter()
            .filter(|r| r.status == StageStatus::Completed)
            .flat_map(|r| r.outputs.iter().map(|(k, v)| (k.clone(), v.clone())))
            .collect()
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hash_bytes(&bytes))
}
