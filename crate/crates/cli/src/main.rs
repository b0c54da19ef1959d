use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use needscope::extraction::EngineKind;
use needscope::pipeline::{
    analyze_stage, attribute_stage, build_engine, extract_stage, ingest_stage, report_stage, run_pipeline,
    topics_stage, AnalyzePaths, ExtractPaths, Layout, PipelineConfig, PipelineError, RunOptions, StageOutput,
    TopicStatus,
};

/// Mine financial needs from post dumps: filter, attribute, extract, model topics, report.
#[derive(Debug, Parser)]
#[command(name = "needscope", version)]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory. Stage commands default their inputs and outputs to it.
    #[arg(long = "out", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "rule|llm")]
    engine: Option<EngineKind>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse dumps, drop duplicates and posts outside the window.
    Ingest(IngestArgs),
    /// Resolve per-user age and income.
    Attribute(AttributeArgs),
    /// Filter eligible posts and extract needs.
    Extract(ExtractArgs),
    /// Fit the topic model and select k.
    Topics(TopicsArgs),
    /// Build tables, matrices and correlations.
    Analyze(AnalyzeArgs),
    /// Write the summary document and reference reconciliation.
    Report(ReportArgs),
    /// Every stage in order, resuming where possible.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// `YYYY-MM-DD..YYYY-MM-DD`, inclusive.
    #[arg(long)]
    window: Option<String>,
    /// Corpus file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Response cache directory (llm engine).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TopicsArgs {
    #[arg(long)]
    needs: Option<PathBuf>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    patience: Option<u32>,
    #[arg(long)]
    iterations: Option<u32>,
    /// One topic name per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    needs: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Omit to skip topic tables.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding analytics.json.
    #[arg(long)]
    analytics: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    window: Option<String>,
    /// Ignore the previous manifest and re-run every stage.
    #[arg(long)]
    force: bool,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out_dir {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(engine) = cli.engine {
        cfg.engine.kind = engine;
    }
    match &cli.command {
        Command::Ingest(IngestArgs { input, window, .. }) | Command::Run(RunArgs { input, window, .. }) => {
            if !input.is_empty() {
                cfg.input.paths = input.clone();
            }
            if let Some(w) = window {
                cfg.input.window = w.clone();
            }
        }
        Command::Extract(a) => {
            if let Some(c) = &a.cache {
                cfg.engine.cache_dir = Some(c.clone());
            }
        }
        Command::Topics(a) => {
            let t = &mut cfg.topics;
            t.k_min = a.k_min.unwrap_or(t.k_min);
            t.k_max = a.k_max.unwrap_or(t.k_max);
            t.epsilon = a.epsilon.unwrap_or(t.epsilon);
            t.patience = a.patience.unwrap_or(t.patience);
            t.iterations = a.iterations.unwrap_or(t.iterations);
            if a.labels.is_some() {
                t.labels_file = a.labels.clone();
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(out: &StageOutput) {
    for p in &out.outputs {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = load_config(cli)?;
    let layout = Layout::new(&cfg.out);
    let concurrency = cfg.engine.llm.max_concurrency;
    match &cli.command {
        Command::Ingest(a) => {
            let out = a.out.clone().unwrap_or_else(|| layout.corpus());
            let (o, stats) = ingest_stage(&cfg.input.paths, &cfg.window()?, &out)?;
            report(&o);
            println!(
                "{} posts from {} users ({} rejected lines, {} duplicates, {} outside window)",
                stats.posts, stats.users, stats.rejected_lines, stats.duplicates, stats.outside_window
            );
        }
        Command::Attribute(a) => {
            let engine = build_engine(&cfg.engine, &cfg.cache_dir())?;
            let corpus = a.corpus.clone().unwrap_or_else(|| layout.corpus());
            let out = a.out.clone().unwrap_or_else(|| layout.profiles());
            let (o, profiles) = attribute_stage(&corpus, engine.as_ref(), &cfg.income, concurrency, &out)?;
            report(&o);
            println!("{} user profiles resolved", profiles.len());
        }
        Command::Extract(a) => {
            let engine = build_engine(&cfg.engine, &cfg.cache_dir())?;
            let paths = ExtractPaths {
                corpus: a.corpus.clone().unwrap_or_else(|| layout.corpus()),
                profiles: a.profiles.clone().unwrap_or_else(|| layout.profiles()),
                out: a.out.clone().unwrap_or_else(|| layout.needs()),
            };
            let (o, stats) = extract_stage(&paths, engine.as_ref(), &cfg.thresholds()?, concurrency)?;
            report(&o);
            println!("{} eligible posts from {} users", stats.eligible_posts, stats.eligible_users);
        }
        Command::Topics(a) => {
            let needs = a.needs.clone().unwrap_or_else(|| layout.needs());
            let out = a.out.clone().unwrap_or_else(|| layout.model());
            let (o, summary) = topics_stage(&needs, &cfg.selection(), cfg.topics.labels_file.as_deref(), &out)?;
            report(&o);
            match summary.status {
                TopicStatus::Fitted => {
                    let trail: Vec<String> = summary.w_k.iter().map(|(k, w)| format!("W_{k}={w}")).collect();
                    println!("k = {} ({})", summary.chosen_k.unwrap_or(0), trail.join(", "));
                }
                TopicStatus::Skipped => println!("topic modeling skipped"),
            }
        }
        Command::Analyze(a) => {
            let model = a.model.clone().or_else(|| Some(layout.model()).filter(|p| a.needs.is_none() && p.exists()));
            let paths = AnalyzePaths {
                needs: a.needs.clone().unwrap_or_else(|| layout.needs()),
                profiles: a.profiles.clone().unwrap_or_else(|| layout.profiles()),
                model,
                out_dir: a.out.clone().unwrap_or_else(|| layout.report_dir()),
            };
            let (o, bundle) = analyze_stage(&paths)?;
            report(&o);
            println!("{} needs analysed", bundle.n_needs);
        }
        Command::Report(a) => {
            let analytics = a.analytics.clone().unwrap_or_else(|| layout.report_dir());
            let out = a.out.clone().unwrap_or_else(|| analytics.clone());
            report(&report_stage(&analytics, &out)?);
        }
        Command::Run(a) => {
            let manifest = run_pipeline(&cfg, RunOptions { force: a.force })?;
            for r in &manifest.stages {
                println!("{:<10} {:?} {:>7} ms  {} outputs", r.stage.as_str(), r.status, r.duration_ms, r.outputs.len());
            }
            println!("manifest: {}", layout.dir.join(needscope::pipeline::MANIFEST_FILE).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
