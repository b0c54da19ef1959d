use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::attribution::IncomeConversion;
use crate::corpus::{FilterThresholds, PostCountBasis, SampleWindow};
use crate::extraction::{EngineConfig, EngineKind};
use crate::topics::{LdaParams, SelectionParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub paths: Vec<PathBuf>,
    /// `YYYY-MM-DD..YYYY-MM-DD`, both days included.
    pub window: String,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig { paths: Vec::new(), window: "2020-01-01..2023-12-31".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_posts: i64,
    pub min_words: i64,
    pub count_basis: PostCountBasis,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { min_posts: 15, min_words: 20, count_basis: PostCountBasis::AllPosts }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub kind: EngineKind,
    /// Also bounds the rule engine's worker pool via `max_concurrency`.
    pub llm: EngineConfig,
    /// Response cache directory; defaults to `<out>/cache`.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub epsilon: f64,
    pub patience: u32,
    /// `None` means 50 / k.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: u32,
    pub average_last: u32,
    /// Optional file with one topic name per line, in topic order.
    pub labels_file: Option<PathBuf>,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        let s = SelectionParams::default();
        TopicsConfig {
            k_min: s.k_min,
            k_max: s.k_max,
            epsilon: s.epsilon,
            patience: s.patience,
            alpha: s.lda.alpha,
            beta: s.lda.beta,
            iterations: s.lda.iterations,
            average_last: s.lda.average_last,
            labels_file: None,
        }
    }
}

/// Everything a run depends on. Serialized verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root of every random stream in the run.
    pub seed: u64,
    pub out: PathBuf,
    pub input: InputConfig,
    pub filter: FilterConfig,
    pub income: IncomeConversion,
    pub engine: EngineSection,
    pub topics: TopicsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out: PathBuf::from("needscope-out"),
            input: InputConfig::default(),
            filter: FilterConfig::default(),
            income: IncomeConversion::default(),
            engine: EngineSection::default(),
            topics: TopicsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rejects inconsistent settings before any stage runs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Validation(m));
        if self.filter.min_posts < 1 || self.filter.min_words < 1 {
            return bad(format!(
                "filter thresholds must be positive (min_posts={}, min_words={})",
                self.filter.min_posts, self.filter.min_words
            ));
        }
        self.window()?;
        self.selection().validate().map_err(|e| PipelineError::Validation(e.to_string()))?;
        let t = &self.topics;
        if t.iterations < 1 || t.average_last < 1 {
            return bad("topics.iterations and topics.average_last must be ≥ 1".into());
        }
        if !(t.beta > 0.0) || t.alpha.is_some_and(|a| !(a > 0.0)) {
            return bad("topic priors must be positive".into());
        }
        if self.engine.llm.max_concurrency < 1 {
            return bad("engine.llm.max_concurrency must be ≥ 1".into());
        }
        if !(self.income.hours_per_week > 0.0 && self.income.weeks_per_year > 0.0) {
            return bad("income conversion constants must be positive".into());
        }
        Ok(())
    }

    pub fn window(&self) -> Result<SampleWindow, PipelineError> {
        SampleWindow::parse(&self.input.window).map_err(|e| PipelineError::Validation(e.to_string()))
    }

    pub fn thresholds(&self) -> Result<FilterThresholds, PipelineError> {
        let mut t = FilterThresholds::new(self.filter.min_posts, self.filter.min_words)
            .map_err(|e| PipelineError::Validation(e.to_string()))?;
        t.count_basis = self.filter.count_basis;
        Ok(t)
    }

    pub fn selection(&self) -> SelectionParams {
        let t = &self.topics;
        SelectionParams {
            k_min: t.k_min,
            k_max: t.k_max,
            epsilon: t.epsilon,
            patience: t.patience,
            lda: LdaParams { alpha: t.alpha, beta: t.beta, iterations: t.iterations, average_last: t.average_last },
            seed: self.seed,
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.engine.cache_dir.clone().unwrap_or_else(|| self.out.join("cache"))
    }
}
