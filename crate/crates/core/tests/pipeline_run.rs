use std::fs;
use std::path::{Path, PathBuf};

use needscope::pipeline::{run_pipeline, Layout, PipelineConfig, PipelineError, RunOptions, Stage, StageStatus, TopicSummary};

fn synthetic() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_posts.jsonl")
}

fn config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.out = out.to_path_buf();
    c.input.paths = vec![synthetic()];
    c
}

#[test]
fn synthetic_run_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_pipeline(&config(a.path()), RunOptions::default()).unwrap();
    let mb = run_pipeline(&config(b.path()), RunOptions::default()).unwrap();
    assert_eq!(ma.stages.len(), 6);
    assert!(ma.stages.iter().all(|r| r.status == StageStatus::Completed));
    assert_eq!(ma.output_hashes(), mb.output_hashes());

    let l = Layout::new(a.path());
    let summary = fs::read_to_string(l.report_dir().join("summary.md")).unwrap();
    assert!(summary.contains("H1 (NHF)"), "{summary}");
    let topics: TopicSummary = serde_json::from_str(&fs::read_to_string(l.topic_summary()).unwrap()).unwrap();
    eprintln!("{topics:?}");
    for name in ["age_groups.csv", "correlations.csv", "cooccurrence_npf_edges.csv", "paper_reconciliation.json"] {
        assert!(l.report_dir().join(name).exists(), "{name}");
    }
}

#[test]
fn rerun_skips_up_to_date_stages_and_redoes_deleted_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let first = run_pipeline(&cfg, RunOptions::default()).unwrap();
    let l = Layout::new(dir.path());
    fs::remove_file(l.report_dir().join("summary.md")).unwrap();
    let second = run_pipeline(&cfg, RunOptions::default()).unwrap();
    assert_eq!(first.output_hashes(), second.output_hashes());
    // Untouched stages keep their original record, timing included.
    assert_eq!(first.record(Stage::Topics), second.record(Stage::Topics));
    assert!(l.report_dir().join("summary.md").exists());
}

#[test]
fn invalid_config_does_no_work() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&dir.path().join("out"));
    cfg.topics.k_min = 1;
    let err = run_pipeline(&cfg, RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Validation(_)));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_input_records_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.input.paths = vec![dir.path().join("nope.jsonl")];
    let err = run_pipeline(&cfg, RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let m = needscope::pipeline::RunManifest::load(dir.path()).unwrap().unwrap();
    assert_eq!(m.record(Stage::Ingest).unwrap().status, StageStatus::Failed);
}
