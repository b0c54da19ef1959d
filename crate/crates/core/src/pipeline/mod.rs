//! Stage orchestration, run configuration, the run manifest and the report summary.
//!
//! Each stage function reads only files written by earlier stages, so any of
//! them can be run on its own from persisted intermediates. [`run_pipeline`]
//! chains them over a fixed [`Layout`] and records hashes in a [`RunManifest`].

mod config;
mod manifest;
mod report;
mod run;
mod stages;

pub use config::{EngineSection, FilterConfig, InputConfig, PipelineConfig, TopicsConfig};
pub use manifest::{hash_bytes, hash_file, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use report::{h1_line, h2_line, ordering_statement, render_summary};
pub use run::{run_pipeline, Layout, RunOptions};
pub use stages::{
    analyze_stage, attribute_stage, build_engine, extract_stage, ingest_stage, report_stage, topics_stage,
    AnalyzePaths, ExtractPaths, IngestStats, StageOutput, TopicStatus, TopicSummary, TopicWords,
};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Attribute,
    Extract,
    Topics,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Ingest, Stage::Attribute, Stage::Extract, Stage::Topics, Stage::Analyze, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Attribute => "attribute",
            Stage::Extract => "extract",
            Stage::Topics => "topics",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("missing artifact {}: run the `{stage}` stage first", path.display())]
    MissingArtifact { path: PathBuf, stage: Stage },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn stage(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Stage { stage, message: e.to_string() }
    }

    /// 1 validation, 2 stage failure, 3 I/O (a missing upstream artifact counts as I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Stage { .. } => 2,
            PipelineError::MissingArtifact { .. } | PipelineError::Io { .. } => 3,
        }
    }
}

/// `dir/stem.tag.ext` next to `path`, e.g. `needs.jsonl` → `needs.posts.jsonl`.
pub fn sibling(path: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}
