use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use waypoint::assets;
use waypoint::engine::{self, baseline_pipeline, run_sequential_baseline, GraphMode, SessionConfig};
use waypoint::eval::{load_dataset, run_experiment, Ablation, AccuracyOptions, DatasetFormat, ExperimentConfig};
use waypoint::graph::ActionId;
use waypoint::memory::VisualQuestion;
use waypoint::oracle::RemoteConfig;
use waypoint::trace::{
    histogram_csv, induce_graph, length_distribution, load_traces, replay, tool_frequency, verdict_frequency,
    RunTrace, TraceMode, TraceStore,
};
use waypoint_service::{serve, OracleSpec, Profile, ServiceConfig, ToolsSpec};

/// Tool-using visual question answering driven by a transition graph.
#[derive(Debug, Parser)]
#[command(name = "waypoint", version)]
struct Cli {
    #[command(flatten)]
    backend: BackendArgs,
    /// Directory for traces, reports and tables.
    #[arg(long, global = true, default_value = "waypoint-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleKind {
    Scripted,
    Remote,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ToolsKind {
    Mock,
    Http,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Constrained,
    Unconstrained,
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Profile TOML; its values override the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true)]
    exemplars: Option<PathBuf>,
    /// Template directory with a manifest.toml.
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    oracle: Option<OracleKind>,
    #[arg(long, global = true)]
    oracle_fixtures: Option<PathBuf>,
    #[arg(long, global = true)]
    oracle_endpoint: Option<String>,
    /// Environment variable holding the oracle bearer token.
    #[arg(long, global = true)]
    oracle_token_env: Option<String>,
    #[arg(long, global = true, value_enum)]
    tools: Option<ToolsKind>,
    #[arg(long, global = true)]
    tool_fixtures: Option<PathBuf>,
    #[arg(long, global = true)]
    tools_endpoint: Option<String>,
    #[arg(long, global = true)]
    tool_cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Planner decision limit; 0 disables it.
    #[arg(long, global = true)]
    max_steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer one question.
    Run(RunArgs),
    /// Score a dataset with the agent, a baseline or an ablation.
    Eval(EvalArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Count transitions in traces and write a graph file.
    InduceGraph(TracesArgs),
    /// Write tool, length and verdict tables for traces.
    Stats(StatsArgs),
    /// Re-execute a trace and check for divergence.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    question: Option<String>,
    #[arg(long)]
    image: Option<String>,
    #[arg(long)]
    question_id: Option<String>,
    /// Run a named sequential baseline instead of the planner.
    #[arg(long, conflicts_with = "pipeline")]
    baseline: Option<String>,
    /// Comma-separated tools for a custom sequential pipeline.
    #[arg(long, value_delimiter = ',')]
    pipeline: Vec<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// JSONL or CSV dataset; the shipped mock dataset by default.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, conflicts_with = "pipeline")]
    baseline: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pipeline: Vec<String>,
    /// A preset (search, caption_vqa, object) or comma-separated tools.
    #[arg(long)]
    ablation: Option<String>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Accept numeric predictions inside a gold `lo - hi` range.
    #[arg(long)]
    numeric_range: bool,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    service_config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
}

#[derive(Debug, Args)]
struct TracesArgs {
    /// A trace file or a directory of traces.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long, value_enum)]
    trace_mode: Option<TraceModeArg>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    traces: TracesArgs,
    /// Also tabulate tool choices at this call position.
    #[arg(long)]
    position: Option<usize>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TraceModeArg {
    Agent,
    Human,
    Baseline,
}

impl From<TraceModeArg> for TraceMode {
    fn from(m: TraceModeArg) -> Self {
        match m {
            TraceModeArg::Agent => TraceMode::Agent,
            TraceModeArg::Human => TraceMode::Human,
            TraceModeArg::Baseline => TraceMode::Baseline,
        }
    }
}

impl BackendArgs {
    fn profile(&self) -> Result<Profile> {
        let oracle = match self.oracle {
            Some(OracleKind::Remote) => {
                let endpoint = self
                    .oracle_endpoint
                    .clone()
                    .ok_or_else(|| anyhow!("--oracle remote needs --oracle-endpoint"))?;
                Some(OracleSpec::Remote(RemoteConfig {
                    token_env: self.oracle_token_env.clone(),
                    ..RemoteConfig::new(endpoint)
                }))
            }
            Some(OracleKind::Scripted) | None if self.oracle_fixtures.is_some() => Some(OracleSpec::Scripted {
                fixtures: self.oracle_fixtures.clone(),
                relaxed: false,
            }),
            _ => None,
        };
        let tools = match self.tools {
            Some(ToolsKind::Http) => Some(ToolsSpec::Http {
                endpoint: self
                    .tools_endpoint
                    .clone()
                    .ok_or_else(|| anyhow!("--tools http needs --tools-endpoint"))?,
                token_env: None,
                timeout_secs: 30,
            }),
            Some(ToolsKind::Mock) | None if self.tool_fixtures.is_some() => Some(ToolsSpec::Mock {
                fixtures: self.tool_fixtures.clone(),
            }),
            _ => None,
        };
        let flags = Profile {
            graph: self.graph.clone(),
            exemplars: self.exemplars.clone(),
            templates: self.templates.clone(),
            oracle,
            tools,
            tool_cache: self.tool_cache.clone(),
            mode: self.mode.map(|m| match m {
                ModeArg::Constrained => GraphMode::Constrained,
                ModeArg::Unconstrained => GraphMode::Unconstrained,
            }),
            max_steps: self.max_steps,
            exemplar_budget: None,
        };
        match &self.config {
            Some(path) => {
                let file = Profile::load(path)?;
                let base = path.parent().unwrap_or(Path::new("."));
                Ok(flags.overlay(file.relative_to(base)))
            }
            None => Ok(flags),
        }
    }
}

fn pipeline_of(baseline: &Option<String>, pipeline: &[String]) -> Result<Option<(String, Vec<ActionId>)>> {
    if let Some(name) = baseline {
        let tools = baseline_pipeline(name).ok_or_else(|| anyhow!("unknown baseline `{name}`"))?;
        return Ok(Some((name.clone(), tools)));
    }
    if pipeline.is_empty() {
        return Ok(None);
    }
    Ok(Some(("pipeline".into(), pipeline.iter().map(|t| ActionId::from(t.trim())).collect())))
}

fn ablation_of(spec: &str) -> Ablation {
    Ablation::preset(spec).unwrap_or_else(|| {
        let tools: Vec<&str> = spec.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
        Ablation::new(format!("w/o {}", tools.join("/")), tools)
    })
}

fn traces_of(args: &TracesArgs) -> Result<Vec<RunTrace>> {
    let traces = load_traces(&args.traces).with_context(|| format!("cannot read traces from {}", args.traces.display()))?;
    let traces: Vec<RunTrace> = match args.trace_mode {
        Some(m) => traces.into_iter().filter(|t| t.header.mode == m.into()).collect(),
        None => traces,
    };
    if traces.is_empty() {
        bail!("no traces found in {}", args.traces.display());
    }
    Ok(traces)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn run(args: &RunArgs, config: &SessionConfig, out_dir: &Path) -> Result<()> {
    let golden = assets::scenario(assets::GOLDEN_SCENARIO).expect("golden scenario ships");
    let question = VisualQuestion::new(
        args.question_id.clone().unwrap_or_else(|| {
            if args.question.is_none() {
                golden.id.clone()
            } else {
                "cli".into()
            }
        }),
        args.image.clone().unwrap_or(golden.image_ref.clone()),
        args.question.clone().unwrap_or(golden.question.clone()),
    );
    let result = match pipeline_of(&args.baseline, &args.pipeline)? {
        Some((_, tools)) => run_sequential_baseline(&tools, config, question)?,
        None => engine::run(config, question),
    };
    let store = TraceStore::open(out_dir.join("traces"))?;
    let path = store.save(&result.trace)?;
    println!("status: {}", result.status);
    println!("answer: {}", result.answer.as_deref().unwrap_or("-"));
    println!("tools: {}", result.trace.tool_calls().iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" -> "));
    println!("trace: {}", path.display());
    Ok(())
}

fn eval(args: &EvalArgs, config: &SessionConfig, out_dir: &Path) -> Result<()> {
    let dataset = match &args.dataset {
        Some(p) => load_dataset(p, DatasetFormat::from_path(p)).with_context(|| format!("dataset {}", p.display()))?,
        None => assets::dataset(),
    };
    let label = args.label.clone().unwrap_or_default();
    let mut experiment = match pipeline_of(&args.baseline, &args.pipeline)? {
        Some((name, tools)) => ExperimentConfig::baseline(if label.is_empty() { name } else { label }, tools),
        None => ExperimentConfig::agent(label),
    };
    if let Some(spec) = &args.ablation {
        experiment = experiment.with_ablation(ablation_of(spec));
    }
    if experiment.label.is_empty() {
        experiment.label = "agent".into();
    }
    experiment = experiment.with_workers(args.workers);
    experiment.accuracy = AccuracyOptions {
        numeric_range: args.numeric_range,
    };
    experiment.trace_dir = Some(out_dir.join("traces"));
    let (report, _) = run_experiment(&dataset, config, &experiment)?;
    let path = out_dir.join("report.json");
    write(&path, report.to_json() + "\n")?;
    println!("{}: {:.2}% over {} questions", report.label, report.mean_accuracy * 100.0, report.records.len());
    for (status, n) in &report.status_counts {
        println!("  {status}: {n}");
    }
    println!("report: {}", path.display());
    Ok(())
}

fn induce(args: &TracesArgs, out_dir: &Path) -> Result<()> {
    let traces = traces_of(args)?;
    let induced = induce_graph(&traces);
    let graph = induced
        .to_transition_graph()
        .map_err(|e| anyhow!("traces do not induce a valid graph: {e}"))?;
    let toml_path = out_dir.join("induced_graph.toml");
    let csv_path = out_dir.join("induced_graph.csv");
    write(&toml_path, graph.serialize())?;
    write(&csv_path, induced.to_csv())?;
    println!(
        "{} traces, {} states, {} edges",
        traces.len(),
        induced.nodes.len(),
        induced.edge_counts.len()
    );
    println!("graph: {}", toml_path.display());
    println!("table: {}", csv_path.display());
    Ok(())
}

fn stats(args: &StatsArgs, out_dir: &Path) -> Result<()> {
    let traces = traces_of(&args.traces)?;
    let mut tables = vec![
        ("tool_frequency.csv", histogram_csv(["tool", "count"], &tool_frequency(&traces, None))),
        ("length_distribution.csv", histogram_csv(["tool_calls", "traces"], &length_distribution(&traces))),
        ("verdict_frequency.csv", histogram_csv(["verdict", "count"], &verdict_frequency(&traces))),
    ];
    if let Some(k) = args.position {
        tables.push((
            "tool_frequency_at_position.csv",
            histogram_csv(["tool", "count"], &tool_frequency(&traces, Some(k))),
        ));
    }
    println!("{} traces", traces.len());
    for (name, table) in tables {
        let path = out_dir.join(name);
        write(&path, table)?;
        println!("table: {}", path.display());
    }
    Ok(())
}

fn replay_trace(args: &ReplayArgs, config: &SessionConfig) -> Result<()> {
    let trace = RunTrace::load_file(&args.trace).with_context(|| format!("trace {}", args.trace.display()))?;
    let result = replay(&trace, config)?;
    println!(
        "replayed {} events without divergence; status {}",
        result.trace.events.len(),
        result.status
    );
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let profile = cli.backend.profile()?;
    let build = || -> Result<SessionConfig> { Ok(profile.build()?) };
    match &cli.command {
        Command::Run(args) => {
            let config = build()?;
            run(args, &config, &cli.out_dir)?;
            profile.save_cache(&config).context("cannot save tool cache")?;
        }
        Command::Eval(args) => {
            let config = build()?;
            eval(args, &config, &cli.out_dir)?;
            profile.save_cache(&config).context("cannot save tool cache")?;
        }
        Command::Serve(args) => {
            let mut service = match &args.service_config {
                Some(p) => ServiceConfig::load(p)?,
                None => ServiceConfig {
                    data_dir: cli.out_dir.join("traces"),
                    ..ServiceConfig::default()
                },
            };
            service.profiles.entry("default".into()).or_insert(profile);
            if let Some(bind) = &args.bind {
                service.bind = bind.clone();
            }
            tokio::runtime::Runtime::new()?.block_on(serve(service))?;
        }
        Command::InduceGraph(args) => induce(args, &cli.out_dir)?,
        Command::Stats(args) => stats(args, &cli.out_dir)?,
        Command::Replay(args) => replay_trace(args, &build()?)?,
    }
    Ok(())
}
