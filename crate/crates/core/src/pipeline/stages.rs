use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{report, sibling, PipelineError, Stage};
use crate::analytics::{analyze, paper_fixture, reconcile_paper, write_bundle, AnalyticsBundle, AnalyticsInput, TopicAssignment};
use crate::attribution::{attribute_users, detect_mentions, IncomeConversion, PostMentions, UserProfile};
use crate::corpus::{filter_corpus, parse_dump, write_dump, CorpusStats, FilterThresholds, Post, SampleWindow};
use crate::extraction::{
    extract_corpus, EngineKind, ExtractionEngine, LlmEngine, NeedRecord, PostEmotion, ResponseCache, RuleEngine,
    PROMPT_VERSION,
};
use crate::jsonl::{self, JsonlError};
use crate::topics::{read_model, select_k, tokenize, write_model, ModelFile, SelectionParams, TopicsError, TOKENIZER_VERSION};

use super::EngineSection;

/// Files a stage wrote, in write order, plus anything worth telling the user.
#[derive(Debug, Clone, Default)]
pub struct StageOutput {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl StageOutput {
    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn require(path: &Path, stage: Stage) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingArtifact { path: path.to_path_buf(), stage })
    }
}

fn ensure_parent(path: &Path) -> Result<(), PipelineError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e)),
        _ => Ok(()),
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// `producer` is the stage to point at when the file is missing or unreadable.
pub(crate) fn read_json<T: DeserializeOwned>(path: &Path, producer: Stage) -> Result<T, PipelineError> {
    require(path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::stage(producer, format!("{}: {e}", path.display())))
}

fn jsonl_err(e: JsonlError, producer: Stage) -> PipelineError {
    match e {
        JsonlError::Io { path, source } => PipelineError::io(Path::new(&path), source),
        parse @ JsonlError::Parse { .. } => PipelineError::stage(producer, parse),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, producer: Stage) -> Result<Vec<T>, PipelineError> {
    require(path, producer)?;
    jsonl::read_all(path).map_err(|e| jsonl_err(e, producer))
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), PipelineError> {
    jsonl::write_all(path, records).map_err(|e| jsonl_err(e, Stage::Report))
}

/// Reads a post file written by a previous stage; such files must be clean.
fn read_posts(path: &Path, producer: Stage) -> Result<Vec<Post>, PipelineError> {
    require(path, producer)?;
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let parsed = parse_dump(BufReader::new(file)).map_err(|e| PipelineError::stage(producer, e))?;
    if let Some(r) = parsed.rejects.first() {
        return Err(PipelineError::stage(
            producer,
            format!("{}:{}: {}", path.display(), r.line_no, r.reason),
        ));
    }
    Ok(parsed.posts)
}

fn write_posts(path: &Path, posts: &[Post]) -> Result<(), PipelineError> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_dump(&mut w, posts).and_then(|_| w.flush()).map_err(|e| PipelineError::io(path, e))
}

fn pool(concurrency: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| PipelineError::Validation(format!("thread pool: {e}")))
}

pub fn build_engine(section: &EngineSection, cache_dir: &Path) -> Result<Box<dyn ExtractionEngine>, PipelineError> {
    Ok(match section.kind {
        EngineKind::Rule => Box::new(RuleEngine::default()),
        EngineKind::Llm => {
            let cache = ResponseCache::open(cache_dir).map_err(|e| PipelineError::io(cache_dir, e))?;
            Box::new(LlmEngine::new(section.llm.clone(), cache))
        }
    })
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub files: usize,
    pub rejected_lines: usize,
    pub duplicates: usize,
    pub outside_window: usize,
    pub posts: usize,
    pub users: usize,
}

#[derive(Debug, Serialize)]
struct IngestReject<'a> {
    file: &'a str,
    line_no: usize,
    reason: &'a str,
}

/// Parses every input dump, drops repeated ids across files (first wins) and
/// posts outside `window`. Writes the corpus plus `.rejects.jsonl` and
/// `.stats.json` next to it.
pub fn ingest_stage(inputs: &[PathBuf], window: &SampleWindow, out: &Path) -> Result<(StageOutput, IngestStats), PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::Validation("no input dumps given".into()));
    }
    let mut stats = IngestStats { files: inputs.len(), ..Default::default() };
    let mut seen = HashSet::new();
    let mut posts = Vec::new();
    let mut rejects: Vec<(String, usize, String)> = Vec::new();
    for path in inputs {
        let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
        let parsed = parse_dump(BufReader::new(file)).map_err(|e| PipelineError::stage(Stage::Ingest, format!("{}: {e}", path.display())))?;
        stats.duplicates += parsed.duplicates;
        let name = path.display().to_string();
        rejects.extend(parsed.rejects.into_iter().map(|r| (name.clone(), r.line_no, r.reason)));
        for p in parsed.posts {
            if !seen.insert(p.post_id.clone()) {
                stats.duplicates += 1;
            } else if !window.contains(p.created_at) {
                stats.outside_window += 1;
            } else {
                posts.push(p);
            }
        }
    }
    stats.rejected_lines = rejects.len();
    stats.posts = posts.len();
    stats.users = posts.iter().map(|p| p.author.as_str()).collect::<HashSet<_>>().len();

    let mut output = StageOutput::default();
    write_posts(out, &posts)?;
    output.outputs.push(out.to_path_buf());
    let rejects_path = sibling(out, "rejects", "jsonl");
    let records: Vec<IngestReject> =
        rejects.iter().map(|(f, l, r)| IngestReject { file: f, line_no: *l, reason: r }).collect();
    write_jsonl(&rejects_path, &records)?;
    output.outputs.push(rejects_path);
    let stats_path = sibling(out, "stats", "json");
    write_json(&stats_path, &stats)?;
    output.outputs.push(stats_path);
    if stats.rejected_lines > 0 {
        output.warn(format!("{} malformed input lines skipped", stats.rejected_lines));
    }
    if posts.is_empty() {
        output.warn("no posts inside the sample window".into());
    }
    Ok((output, stats))
}

// ---------------------------------------------------------------- attribute

/// Detects age/income mentions in every corpus post and resolves one profile
/// per user. Writes the profiles and `.mentions.jsonl` next to them.
pub fn attribute_stage(
    corpus: &Path,
    engine: &dyn ExtractionEngine,
    conv: &IncomeConversion,
    concurrency: usize,
    out: &Path,
) -> Result<(StageOutput, Vec<UserProfile>), PipelineError> {
    let posts = read_posts(corpus, Stage::Ingest)?;
    let detected: Vec<PostMentions> = pool(concurrency)?
        .install(|| {
            posts
                .par_iter()
                .map(|p| {
                    detect_mentions(p, engine, conv).map(|(ages, incomes)| PostMentions {
                        post_id: p.post_id.clone(),
                        author: p.author.clone(),
                        ages,
                        incomes,
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| PipelineError::stage(Stage::Attribute, e))?;
    let attribution = attribute_users(&posts, &detected);

    let mut output = StageOutput::default();
    write_jsonl(out, &attribution.profiles)?;
    output.outputs.push(out.to_path_buf());
    let mentions_path = sibling(out, "mentions", "jsonl");
    write_jsonl(&mentions_path, &detected)?;
    output.outputs.push(mentions_path);
    let unresolved = attribution.flags.values().filter(|f| !**f).count();
    if unresolved > 0 {
        output.warn(format!("{unresolved} of {} users lack an age or income mention", attribution.flags.len()));
    }
    Ok((output, attribution.profiles))
}

// ---------------------------------------------------------------- extract

#[derive(Debug, Clone)]
pub struct ExtractPaths {
    pub corpus: PathBuf,
    pub profiles: PathBuf,
    /// Need records; eligible posts, emotions and filter stats go next to it.
    pub out: PathBuf,
}

/// Applies the eligibility filter (profiled users only) and extracts needs and
/// emotions from every eligible post.
pub fn extract_stage(
    paths: &ExtractPaths,
    engine: &dyn ExtractionEngine,
    thresholds: &FilterThresholds,
    concurrency: usize,
) -> Result<(StageOutput, CorpusStats), PipelineError> {
    let posts = read_posts(&paths.corpus, Stage::Ingest)?;
    let profiles: Vec<UserProfile> = read_jsonl(&paths.profiles, Stage::Attribute)?;
    let mut flags: HashMap<String, bool> = posts.iter().map(|p| (p.author.clone(), false)).collect();
    for p in &profiles {
        flags.insert(p.user.clone(), true);
    }
    let (eligible, stats) = filter_corpus(&posts, &flags, thresholds);
    let extracted = extract_corpus(engine, &eligible, concurrency).map_err(|e| PipelineError::stage(Stage::Extract, e))?;
    let mut needs: Vec<NeedRecord> = Vec::new();
    let mut emotions: Vec<PostEmotion> = Vec::with_capacity(extracted.len());
    for x in extracted {
        needs.extend(x.needs);
        emotions.push(x.emotion);
    }

    let mut output = StageOutput::default();
    write_jsonl(&paths.out, &needs)?;
    output.outputs.push(paths.out.clone());
    let posts_path = sibling(&paths.out, "posts", "jsonl");
    write_posts(&posts_path, &eligible)?;
    output.outputs.push(posts_path);
    let emotions_path = sibling(&paths.out, "emotions", "jsonl");
    write_jsonl(&emotions_path, &emotions)?;
    output.outputs.push(emotions_path);
    let stats_path = sibling(&paths.out, "stats", "json");
    write_json(&stats_path, &stats)?;
    output.outputs.push(stats_path);
    if eligible.is_empty() {
        output.warn("no post passed the eligibility filter".into());
    }
    Ok((output, stats))
}

// ---------------------------------------------------------------- topics

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicStatus {
    Fitted,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWords {
    pub topic: usize,
    pub label: String,
    pub top_words: Vec<String>,
}

/// Written next to the model file as `.selection.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub status: TopicStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub n_needs: usize,
    pub n_modeled: usize,
    pub chosen_k: Option<usize>,
    /// (k, W_k) for every k fitted, in fitting order.
    pub w_k: Vec<(usize, usize)>,
    pub topics: Vec<TopicWords>,
}

const TOP_WORDS: usize = 10;

fn read_labels(path: &Path) -> Result<Vec<String>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect())
}

/// Fits the topic model over need texts and picks k. A corpus too small to
/// model is not an error: the summary records the skip and no model is written.
pub fn topics_stage(
    needs_path: &Path,
    params: &SelectionParams,
    labels_file: Option<&Path>,
    out: &Path,
) -> Result<(StageOutput, TopicSummary), PipelineError> {
    params.validate().map_err(|e| PipelineError::Validation(e.to_string()))?;
    let needs: Vec<NeedRecord> = read_jsonl(needs_path, Stage::Extract)?;
    let texts: Vec<(String, String)> = needs.iter().map(|n| (n.need_id.clone(), n.topic_text())).collect();
    let summary_path = sibling(out, "selection", "json");
    let mut output = StageOutput::default();

    let skipped = |reason: String, output: &mut StageOutput| -> Result<TopicSummary, PipelineError> {
        output.warn(format!("topic modeling skipped: {reason}"));
        if out.exists() {
            fs::remove_file(out).map_err(|e| PipelineError::io(out, e))?;
        }
        Ok(TopicSummary {
            status: TopicStatus::Skipped,
            reason: Some(reason),
            n_needs: needs.len(),
            n_modeled: 0,
            chosen_k: None,
            w_k: Vec::new(),
            topics: Vec::new(),
        })
    };

    let fitted = tokenize(texts.iter().map(|(id, t)| (id.as_str(), t.as_str()))).and_then(|corpus| {
        select_k(&corpus.needs, corpus.vocab.len(), params).map(|sel| (corpus, sel))
    });
    let summary = match fitted {
        Err(TopicsError::CorpusTooSmall(reason)) => skipped(reason, &mut output)?,
        Err(e) => return Err(PipelineError::stage(Stage::Topics, e)),
        Ok((corpus, sel)) => {
            let mut file = ModelFile::new(&sel.model, &corpus.vocab, corpus.excluded.clone(), TOKENIZER_VERSION, PROMPT_VERSION);
            if let Some(path) = labels_file {
                let labels = read_labels(path)?;
                if labels.len() == sel.chosen_k {
                    file.topic_labels = labels;
                } else {
                    output.warn(format!(
                        "{} has {} labels but k = {}; using default topic names",
                        path.display(),
                        labels.len(),
                        sel.chosen_k
                    ));
                }
            }
            write_model(out, &file).map_err(|e| PipelineError::io(out, e))?;
            output.outputs.push(out.to_path_buf());
            if !corpus.excluded.is_empty() {
                output.warn(format!("{} needs have no modelable token and stay unmodeled", corpus.excluded.len()));
            }
            TopicSummary {
                status: TopicStatus::Fitted,
                reason: None,
                n_needs: needs.len(),
                n_modeled: corpus.needs.len(),
                chosen_k: Some(sel.chosen_k),
                w_k: sel.reports.iter().map(|r| (r.k, r.w_k)).collect(),
                topics: (0..sel.chosen_k)
                    .map(|t| TopicWords {
                        topic: t,
                        label: file.topic_label(t),
                        top_words: sel.model.top_words(t, TOP_WORDS).iter().map(|&w| corpus.vocab.term(w).to_string()).collect(),
                    })
                    .collect(),
            }
        }
    };
    write_json(&summary_path, &summary)?;
    output.outputs.push(summary_path);
    Ok((output, summary))
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Clone)]
pub struct AnalyzePaths {
    /// Need records; the eligible posts and emotions are read from next to it.
    pub needs: PathBuf,
    pub profiles: PathBuf,
    /// `None` when topic modeling was skipped.
    pub model: Option<PathBuf>,
    pub out_dir: PathBuf,
}

pub const ANALYTICS_FILE: &str = "analytics.json";

/// Builds every table and matrix, writing `analytics.json` plus one CSV/JSON
/// file per table into `out_dir`.
pub fn analyze_stage(paths: &AnalyzePaths) -> Result<(StageOutput, AnalyticsBundle), PipelineError> {
    let needs: Vec<NeedRecord> = read_jsonl(&paths.needs, Stage::Extract)?;
    let posts = read_posts(&sibling(&paths.needs, "posts", "jsonl"), Stage::Extract)?;
    let emotions: Vec<PostEmotion> = read_jsonl(&sibling(&paths.needs, "emotions", "jsonl"), Stage::Extract)?;
    let all_profiles: Vec<UserProfile> = read_jsonl(&paths.profiles, Stage::Attribute)?;
    // Profiles of users whose posts were all filtered out would inflate user counts.
    let authors: HashSet<&str> = posts.iter().map(|p| p.author.as_str()).collect();
    let profiles: Vec<UserProfile> = all_profiles.into_iter().filter(|p| authors.contains(p.user.as_str())).collect();
    let topics = match &paths.model {
        Some(path) => {
            require(path, Stage::Topics)?;
            let file = read_model(path).map_err(|e| PipelineError::stage(Stage::Topics, e))?;
            Some(TopicAssignment::from_model_file(&file))
        }
        None => None,
    };
    let bundle = analyze(&AnalyticsInput { profiles: &profiles, posts: &posts, needs: &needs, emotions: &emotions, topics: topics.as_ref() })
        .map_err(|e| PipelineError::stage(Stage::Analyze, e))?;

    let mut output = StageOutput::default();
    let main = paths.out_dir.join(ANALYTICS_FILE);
    write_json(&main, &bundle)?;
    output.outputs.push(main);
    let tables = write_bundle(&paths.out_dir, &bundle).map_err(|e| match e {
        crate::analytics::AnalyticsError::Io { path, source } => PipelineError::io(Path::new(&path), source),
        other => PipelineError::stage(Stage::Analyze, other),
    })?;
    output.outputs.extend(tables);
    if needs.is_empty() {
        output.warn("needs file is empty; all tables have zero counts".into());
    }
    if topics.is_none() {
        output.warn("no topic model; topic tables omitted".into());
    }
    for c in bundle.reconciliation.failures() {
        output.warn(format!("reconciliation check {} failed: expected {}, got {}", c.name, c.expected, c.actual));
    }
    Ok((output, bundle))
}

// ---------------------------------------------------------------- report

pub const SUMMARY_FILE: &str = "summary.md";
pub const PAPER_RECONCILIATION_FILE: &str = "paper_reconciliation.json";

/// Reads `analytics.json` from `analytics_dir` and writes the human-readable
/// summary and the reference-table reconciliation into `out_dir`.
pub fn report_stage(analytics_dir: &Path, out_dir: &Path) -> Result<StageOutput, PipelineError> {
    let bundle: AnalyticsBundle = read_json(&analytics_dir.join(ANALYTICS_FILE), Stage::Analyze)?;
    let reference = reconcile_paper(&paper_fixture());
    let mut output = StageOutput::default();
    let recon = out_dir.join(PAPER_RECONCILIATION_FILE);
    write_json(&recon, &reference)?;
    output.outputs.push(recon);
    let summary = out_dir.join(SUMMARY_FILE);
    ensure_parent(&summary)?;
    fs::write(&summary, report::render_summary(&bundle, &reference)).map_err(|e| PipelineError::io(&summary, e))?;
    output.outputs.push(summary);
    if bundle.n_needs == 0 {
        output.warn("report built from an empty needs set".into());
    }
    Ok(output)
}
