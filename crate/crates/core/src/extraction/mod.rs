//! Extraction engines.
//!
//! Every engine implements [`ExtractionEngine`]; the pipeline only talks to the
//! trait. [`RuleEngine`] is deterministic and offline, [`LlmEngine`] calls an
//! OpenAI-compatible chat endpoint with caching, retries and strict schema
//! validation.

mod cache;
mod emotion;
mod llm;
mod rules;
pub mod schema;
mod types;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Post;

pub use cache::{CacheEntry, ResponseCache};
pub use emotion::score_emotion_lexicon;
pub use llm::{EngineConfig, LlmEngine, RetryPolicy, API_KEY_ENV};
pub use rules::RuleEngine;
pub use types::*;

/// Version of the shipped prompt assets and rule lexicons. Stamped on every
/// cached response and every [`NeedRecord`].
pub const PROMPT_VERSION: &str = "needs-v1";

#[derive(Debug, thiserror::Error)]
pub enum ExtractionError {
    #[error("engine failure: {message}")]
    Engine { message: String, retryable: bool },
    #[error("response for `{schema_id}` failed validation: {reason}")]
    Validation { schema_id: String, reason: String, raw: String },
    #[error("engine configuration: {0}")]
    Config(String),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("post {post_id}: {source}")]
    Post {
        post_id: String,
        #[source]
        source: Box<ExtractionError>,
    },
}

impl ExtractionError {
    pub fn for_post(self, post_id: &str) -> Self {
        match self {
            e @ ExtractionError::Post { .. } => e,
            other => ExtractionError::Post { post_id: post_id.to_string(), source: Box::new(other) },
        }
    }

    /// The innermost error, without post context.
    pub fn root(&self) -> &ExtractionError {
        match self {
            ExtractionError::Post { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self.root(), ExtractionError::Validation { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Rule,
    Llm,
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rule" => Ok(EngineKind::Rule),
            "llm" => Ok(EngineKind::Llm),
            other => Err(format!("unknown engine `{other}` (expected rule or llm)")),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Rule => "rule",
            EngineKind::Llm => "llm",
        })
    }
}

pub trait ExtractionEngine: Send + Sync {
    fn name(&self) -> &str;

    fn prompt_version(&self) -> &str {
        PROMPT_VERSION
    }

    fn summarize(&self, post: &Post) -> Result<QuerySummary, ExtractionError>;

    /// One label per query of `summary`.
    fn extract_needs(&self, summary: &QuerySummary) -> Result<Vec<NeedLabel>, ExtractionError>;

    fn map_hierarchy(
        &self,
        label: &NeedLabel,
        context: &QuerySummary,
    ) -> Result<(NhfLevel7, NpfLevel), ExtractionError>;

    fn assess_behavior(
        &self,
        label: &NeedLabel,
        context: &QuerySummary,
    ) -> Result<(StressLevel, RiskLevel), ExtractionError>;

    fn score_emotion(&self, post: &Post) -> Result<EmotionProfile, ExtractionError> {
        Ok(score_emotion_lexicon(&post.text))
    }

    fn detect_age_income(&self, post: &Post) -> Result<DetectedMentions, ExtractionError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostExtraction {
    pub needs: Vec<NeedRecord>,
    pub emotion: PostEmotion,
}

fn validation(schema_id: &str, reason: impl Into<String>, raw: impl Into<String>) -> ExtractionError {
    ExtractionError::Validation { schema_id: schema_id.into(), reason: reason.into(), raw: raw.into() }
}

/// Runs summary → needs → hierarchy → behavior for one post, plus post-level emotion.
pub fn extract_post(engine: &dyn ExtractionEngine, post: &Post) -> Result<PostExtraction, ExtractionError> {
    let run = || -> Result<PostExtraction, ExtractionError> {
        let summary = engine.summarize(post)?;
        summary
            .validate()
            .map_err(|r| validation(schema::SUMMARY, r, format!("{summary:?}")))?;
        let labels = engine.extract_needs(&summary)?;
        if labels.is_empty() || labels.len() > summary.query_count() {
            return Err(validation(
                schema::NEEDS,
                format!("{} labels for {} queries", labels.len(), summary.query_count()),
                format!("{labels:?}"),
            ));
        }

        let mut needs = Vec::with_capacity(labels.len());
        for (idx, label) in labels.into_iter().enumerate() {
            let (nhf7, npf) = engine.map_hierarchy(&label, &summary)?;
            let (stress, risk) = engine.assess_behavior(&label, &summary)?;
            needs.push(NeedRecord {
                need_id: format!("{}#{}", post.post_id, idx),
                post_id: post.post_id.clone(),
                user: post.author.clone(),
                year: post.year(),
                core_query: summary.core_query.clone(),
                label,
                nhf7,
                nhf5: nhf7.collapse(),
                npf,
                stress,
                risk,
                engine: engine.name().to_string(),
                prompt_version: engine.prompt_version().to_string(),
            });
        }
        let emotion = PostEmotion {
            post_id: post.post_id.clone(),
            user: post.author.clone(),
            emotion: engine.score_emotion(post)?,
        };
        Ok(PostExtraction { needs, emotion })
    };
    run().map_err(|e| e.for_post(&post.post_id))
}

/// Extracts every post on a pool of `concurrency` threads; output order follows `posts`.
pub fn extract_corpus(
    engine: &dyn ExtractionEngine,
    posts: &[Post],
    concurrency: usize,
) -> Result<Vec<PostExtraction>, ExtractionError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| ExtractionError::Config(e.to_string()))?;
    pool.install(|| posts.par_iter().map(|p| extract_post(engine, p)).collect())
}
