use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_needscope"))
}

fn synthetic() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic_posts.jsonl")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("NEEDSCOPE_API_KEY").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_manifest_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", s(dir.path()), "run", "--input", s(&synthetic())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("report/summary.md").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(!manifest.contains("sk-"), "credential leaked into manifest");
}

#[test]
fn stages_run_standalone_with_explicit_paths() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let steps: Vec<Vec<String>> = vec![
        vec!["ingest".into(), "--input".into(), s(&synthetic()).into(), "--window".into(), "2020-01-01..2023-12-31".into(), "--out".into(), s(&p("c.jsonl")).into()],
        vec!["attribute".into(), "--corpus".into(), s(&p("c.jsonl")).into(), "--engine".into(), "rule".into(), "--out".into(), s(&p("u.jsonl")).into()],
        vec![
            "extract".into(), "--corpus".into(), s(&p("c.jsonl")).into(), "--profiles".into(), s(&p("u.jsonl")).into(),
            "--engine".into(), "rule".into(), "--cache".into(), s(&p("cache")).into(), "--out".into(), s(&p("n.jsonl")).into(),
        ],
        vec![
            "topics".into(), "--needs".into(), s(&p("n.jsonl")).into(), "--k-min".into(), "2".into(), "--k-max".into(), "6".into(),
            "--epsilon".into(), "0.01".into(), "--patience".into(), "2".into(), "--seed".into(), "7".into(), "--iterations".into(), "200".into(),
            "--out".into(), s(&p("m.json")).into(),
        ],
        vec![
            "analyze".into(), "--needs".into(), s(&p("n.jsonl")).into(), "--profiles".into(), s(&p("u.jsonl")).into(),
            "--model".into(), s(&p("m.json")).into(), "--out".into(), s(&p("tables")).into(),
        ],
        vec!["report".into(), "--analytics".into(), s(&p("tables")).into()],
    ];
    for args in &steps {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = run(&refs);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    for f in ["c.rejects.jsonl", "u.mentions.jsonl", "n.posts.jsonl", "m.selection.json", "tables/topic_map_npf.csv", "tables/summary.md"] {
        assert!(p(f).exists(), "{f}");
    }

    // Deleting a downstream artifact and re-running only its stage reproduces it.
    let before = fs::read(p("tables/summary.md")).unwrap();
    fs::remove_file(p("tables/summary.md")).unwrap();
    let o = run(&["report", "--analytics", s(&p("tables"))]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(p("tables/summary.md")).unwrap(), before);
}

#[test]
fn k_min_below_two_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", s(dir.path()), "topics", "--k-min", "1"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "no work before validation");
}

#[test]
fn bad_config_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[filter]\nmin_posts = 0\n").unwrap();
    let o = run(&["--config", s(&cfg), "run", "--input", s(&synthetic())]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert_eq!(code(&run(&["--engine", "gpt", "run"])), 1);
}

#[test]
fn missing_upstream_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", s(dir.path()), "extract"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("run the `ingest` stage"), "{}", stderr(&o));
}

#[test]
fn empty_needs_file_gives_empty_tables_and_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    for f in ["n.jsonl", "n.posts.jsonl", "n.emotions.jsonl", "u.jsonl"] {
        fs::write(p(f), "").unwrap();
    }
    let o = run(&["analyze", "--needs", s(&p("n.jsonl")), "--profiles", s(&p("u.jsonl")), "--out", s(&p("t"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
    let o = run(&["report", "--analytics", s(&p("t"))]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(p("t/correlations.csv")).unwrap();
    assert!(csv.lines().count() >= 1);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let out_cfg = dir.path().join("from_config");
    let out_flag = dir.path().join("from_flag");
    fs::write(
        &cfg,
        format!("seed = 3\nout = {:?}\n[input]\npaths = [{:?}]\n[topics]\nk_max = 4\niterations = 100\n", out_cfg, synthetic()),
    )
    .unwrap();
    let o = run(&["--config", s(&cfg), "--out", s(&out_flag), "--seed", "9", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!out_cfg.exists());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_flag.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["config"]["topics"]["k_max"], 4);
}
