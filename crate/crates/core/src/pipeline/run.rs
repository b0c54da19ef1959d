use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use super::manifest::{hash_bytes, hash_file, RunManifest, StageRecord, StageStatus};
use super::stages::{
    analyze_stage, attribute_stage, build_engine, extract_stage, ingest_stage, read_json, report_stage, topics_stage,
    AnalyzePaths, ExtractPaths, StageOutput, TopicStatus, TopicSummary, ANALYTICS_FILE,
};
use super::{sibling, PipelineConfig, PipelineError, Stage};
use crate::extraction::PROMPT_VERSION;

/// Fixed artifact locations inside a run's output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Layout { dir: dir.into() }
    }

    pub fn corpus(&self) -> PathBuf {
        self.dir.join("corpus.jsonl")
    }

    pub fn profiles(&self) -> PathBuf {
        self.dir.join("profiles.jsonl")
    }

    pub fn needs(&self) -> PathBuf {
        self.dir.join("needs.jsonl")
    }

    pub fn eligible_posts(&self) -> PathBuf {
        sibling(&self.needs(), "posts", "jsonl")
    }

    pub fn emotions(&self) -> PathBuf {
        sibling(&self.needs(), "emotions", "jsonl")
    }

    pub fn model(&self) -> PathBuf {
        self.dir.join("topic_model.json")
    }

    pub fn topic_summary(&self) -> PathBuf {
        sibling(&self.model(), "selection", "json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.dir.join("report")
    }

    pub fn analytics(&self) -> PathBuf {
        self.report_dir().join(ANALYTICS_FILE)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Re-run every stage even when the manifest says it is up to date.
    pub force: bool,
}

fn key(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

fn hash_all(dir: &Path, paths: &[PathBuf]) -> Result<BTreeMap<String, String>, PipelineError> {
    paths.iter().map(|p| Ok((key(dir, p), hash_file(p)?))).collect()
}

fn up_to_date(dir: &Path, rec: &StageRecord, fingerprint: &str) -> bool {
    rec.status == StageStatus::Completed
        && rec.fingerprint == fingerprint
        && rec.outputs.iter().all(|(k, h)| hash_file(&dir.join(k)).is_ok_and(|cur| &cur == h))
}

/// Config slice and input files for each stage. Only what changes a stage's
/// output goes into its fingerprint.
fn stage_inputs(stage: Stage, cfg: &PipelineConfig, l: &Layout) -> Result<(Value, Vec<PathBuf>), PipelineError> {
    let engine = json!({
        "kind": cfg.engine.kind,
        "model": cfg.engine.llm.model,
        "base_url": cfg.engine.llm.base_url,
        "prompt_version": PROMPT_VERSION,
    });
    Ok(match stage {
        Stage::Ingest => (json!({ "window": cfg.input.window }), cfg.input.paths.clone()),
        Stage::Attribute => (json!({ "engine": engine, "income": cfg.income }), vec![l.corpus()]),
        Stage::Extract => (json!({ "engine": engine, "filter": cfg.filter }), vec![l.corpus(), l.profiles()]),
        Stage::Topics => {
            let mut files = vec![l.needs()];
            files.extend(cfg.topics.labels_file.clone());
            (json!({ "selection": cfg.selection() }), files)
        }
        Stage::Analyze => {
            let mut files = vec![l.needs(), l.eligible_posts(), l.emotions(), l.profiles(), l.topic_summary()];
            if l.model().exists() {
                files.push(l.model());
            }
            (Value::Null, files)
        }
        Stage::Report => (Value::Null, vec![l.analytics()]),
    })
}

fn execute(stage: Stage, cfg: &PipelineConfig, l: &Layout) -> Result<StageOutput, PipelineError> {
    let concurrency = cfg.engine.llm.max_concurrency;
    match stage {
        Stage::Ingest => Ok(ingest_stage(&cfg.input.paths, &cfg.window()?, &l.corpus())?.0),
        Stage::Attribute => {
            let engine = build_engine(&cfg.engine, &cfg.cache_dir())?;
            Ok(attribute_stage(&l.corpus(), engine.as_ref(), &cfg.income, concurrency, &l.profiles())?.0)
        }
        Stage::Extract => {
            let engine = build_engine(&cfg.engine, &cfg.cache_dir())?;
            let paths = ExtractPaths { corpus: l.corpus(), profiles: l.profiles(), out: l.needs() };
            Ok(extract_stage(&paths, engine.as_ref(), &cfg.thresholds()?, concurrency)?.0)
        }
        Stage::Topics => Ok(topics_stage(&l.needs(), &cfg.selection(), cfg.topics.labels_file.as_deref(), &l.model())?.0),
        Stage::Analyze => {
            let summary: TopicSummary = read_json(&l.topic_summary(), Stage::Topics)?;
            let model = (summary.status == TopicStatus::Fitted).then(|| l.model());
            let paths = AnalyzePaths { needs: l.needs(), profiles: l.profiles(), model, out_dir: l.report_dir() };
            Ok(analyze_stage(&paths)?.0)
        }
        Stage::Report => report_stage(&l.report_dir(), &l.report_dir()),
    }
}

/// Runs every stage in order into `config.out`, skipping stages whose
/// fingerprint and outputs match the previous manifest. The manifest is saved
/// after every stage, so a failure leaves a record of what completed.
pub fn run_pipeline(config: &PipelineConfig, opts: RunOptions) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let layout = Layout::new(&config.out);
    let dir = layout.dir.as_path();
    let previous = if opts.force { None } else { RunManifest::load(dir).ok().flatten() };
    let mut manifest = RunManifest::new(config);

    for stage in Stage::ALL {
        let (slice, inputs) = stage_inputs(stage, config, &layout)?;
        for p in &inputs {
            if !p.exists() {
                let producer = Stage::ALL.into_iter().rev().find(|s| *s < stage).unwrap_or(Stage::Ingest);
                let err = if stage == Stage::Ingest {
                    PipelineError::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input dump not found"))
                } else {
                    PipelineError::MissingArtifact { path: p.clone(), stage: producer }
                };
                return Err(fail(&mut manifest, dir, stage, String::new(), BTreeMap::new(), err));
            }
        }
        let input_hashes = hash_all(dir, &inputs)?;
        let fingerprint = hash_bytes(&serde_json::to_vec(&json!([stage, slice, input_hashes])).expect("fingerprint serializes"));

        if let Some(rec) = previous.as_ref().and_then(|m| m.record(stage)) {
            if up_to_date(dir, rec, &fingerprint) {
                log::info!("{stage}: up to date, skipped");
                manifest.upsert(rec.clone());
                continue;
            }
        }

        log::info!("{stage}: running");
        let start = Instant::now();
        match execute(stage, config, &layout) {
            Ok(out) => {
                let outputs = hash_all(dir, &out.outputs)?;
                manifest.upsert(StageRecord {
                    stage,
                    status: StageStatus::Completed,
                    fingerprint,
                    duration_ms: start.elapsed().as_millis() as u64,
                    inputs: input_hashes,
                    outputs,
                    warnings: out.warnings,
                    error: None,
                });
                manifest.save(dir)?;
            }
            Err(e) => return Err(fail(&mut manifest, dir, stage, fingerprint, input_hashes, e)),
        }
    }
    Ok(manifest)
}

fn fail(
    manifest: &mut RunManifest,
    dir: &Path,
    stage: Stage,
    fingerprint: String,
    inputs: BTreeMap<String, String>,
    err: PipelineError,
) -> PipelineError {
    manifest.upsert(StageRecord {
        stage,
        status: StageStatus::Failed,
        fingerprint,
        duration_ms: 0,
        inputs,
        outputs: BTreeMap::new(),
        warnings: Vec::new(),
        error: Some(err.to_string()),
    });
    if let Err(e) = manifest.save(dir) {
        log::error!("could not save manifest: {e}");
    }
    err
}
