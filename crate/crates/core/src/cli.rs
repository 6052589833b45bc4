//! Command-line front end: `gen`, `simulate`, `train`, `evaluate`, `report`.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 1 for
//! failures while running.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::abr::ControllerSpec;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_with_threads, simulate, spec_factory, ControllerFactory, EvalSetup};
use crate::media::{
    generate_manifest, load_manifest, load_network_trace, Genre, NetworkTrace, TraceMix, TracePreset,
    VideoManifest,
};
use crate::report::{
    aggregate, markdown_table, read_sessions_csv, session_svg, write_aggregate_csv, write_sessions_csv,
};
use crate::qoe::SUMMARY_COLUMNS;
use crate::sac::{build_trace_pools, train, write_training_log, Environment, StreamingEnv, TrainReport};
use crate::sim::{load_step_log, save_step_log, StepLogHeader};

#[derive(Debug, Parser)]
#[command(name = "ecoabr", version, about = "Energy-aware low-latency live ABR lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate network traces or a video manifest.
    Gen(GenArgs),
    /// Run one session and write its step log, summary and plot.
    Simulate(SimulateArgs),
    /// Train a SAC policy.
    Train(TrainArgs),
    /// Compare controllers over a directory of traces.
    Evaluate(EvaluateArgs),
    /// Rebuild tables and plots from a previous run's outputs.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    Traces,
    Manifest,
}

#[derive(Debug, Args)]
struct GenArgs {
    kind: GenKind,
    /// Trace family (3g, nyu-lte, 4g, 5g, synthetic) or genre (animation, movie, sports).
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Trace length in seconds.
    #[arg(long, default_value_t = 600.0)]
    duration: f64,
    /// Manifest length in segments.
    #[arg(long, default_value_t = 300)]
    segments: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for traces, file for a manifest.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Genre of the generated manifest when no manifest file is given.
    #[arg(long)]
    genre: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trace: PathBuf,
    /// fixed:<rung>, fixed:max, rule, meanstd or sac:<checkpoint>.
    #[arg(long)]
    abr: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Directory of training traces; generated from the training mix if absent.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Step workers round-robin on one thread (reproducible for any worker count).
    #[arg(long)]
    single_threaded: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Controller specs; repeat the flag or separate with commas.
    #[arg(long, required = true, value_delimiter = ',')]
    abr: Vec<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Output directory of an earlier `evaluate`, `simulate` or `train` run.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn require_exists(what: &str, p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} {} does not exist", p.display())))
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    match a.kind {
        GenKind::Traces => {
            let preset: TracePreset = a.preset.parse()?;
            if a.count == 0 {
                return Err(Error::validation("count must be >= 1"));
            }
            ensure_dir(&a.out)?;
            println!("trace,mean_bw_mbps,duration_s");
            for i in 0..a.count {
                let seed = a.seed.wrapping_add(i as u64);
                let name = format!("{}-{i:03}", preset.name());
                let trace = preset.generate(a.duration, seed)?.with_label(name.clone());
                let path = a.out.join(format!("{name}.csv"));
                trace.save(&path)?;
                println!("{name},{:.4},{}", trace.mean_bandwidth(), trace.duration());
            }
        }
        GenKind::Manifest => {
            let genre: Genre = a.preset.parse()?;
            let manifest = generate_manifest(genre, a.segments, a.seed)?;
            if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                ensure_dir(parent)?;
            }
            manifest.save(&a.out)?;
            println!("title,segments,rungs,min_kbps,max_kbps");
            println!(
                "{},{},{},{},{}",
                manifest.title,
                manifest.n_segments(),
                manifest.ladder.len(),
                manifest.min_bitrate_kbps(),
                manifest.max_bitrate_kbps()
            );
        }
    }
    Ok(())
}

/// Load the config file (if any) and apply command-line overrides.
fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            require_exists("config", p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.sac.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.paths.output_dir = out.clone();
    }
    if let Some(m) = &common.manifest {
        cfg.paths.manifest = Some(m.clone());
    }
    if let Some(g) = &common.genre {
        cfg.media.genre = g.parse()?;
    }
    Ok(cfg)
}

fn resolve_manifest(cfg: &RunConfig) -> Result<Arc<VideoManifest>> {
    let m = match &cfg.paths.manifest {
        Some(p) => load_manifest(p)?,
        None => generate_manifest(cfg.media.genre, cfg.session.session_segments, cfg.seed)?,
    };
    Ok(Arc::new(m))
}

fn eval_setup(cfg: &RunConfig) -> EvalSetup {
    EvalSetup {
        session: cfg.session,
        params: cfg.sim_params(),
        qoe: cfg.qoe,
        energy_reference_kj: cfg.evaluation.energy_reference_kj,
    }
}

fn trace_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Every `*.csv` trace in `dir`, sorted by file name and labelled by stem.
pub fn load_trace_dir(dir: &Path) -> Result<Vec<Arc<NetworkTrace>>> {
    require_exists("trace directory", dir)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::validation(format!("no .csv traces in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| Ok(Arc::new(load_network_trace(p)?.with_label(trace_name(p)))))
        .collect()
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    cfg.validate()?;
    require_exists("trace", &a.trace)?;
    let spec: ControllerSpec = a.abr.as_deref().unwrap_or(&cfg.controller).parse()?;
    let manifest = resolve_manifest(&cfg)?;
    let factory = spec_factory(&spec, manifest.ladder.len())?;
    let trace = Arc::new(load_network_trace(&a.trace)?.with_label(trace_name(&a.trace)));
    let out = cfg.paths.output_dir.clone();
    ensure_dir(&out)?;
    cfg.echo(&out)?;
    let mut ctl = factory();
    let (outcomes, summary) = simulate(&eval_setup(&cfg), trace.clone(), manifest.clone(), ctl.as_mut())?;
    let header = StepLogHeader::new(&spec.to_string(), trace.label(), &manifest.title);
    save_step_log(out.join("steps.jsonl"), &header, &outcomes)?;
    let json = serde_json::to_string_pretty(&summary)?;
    write_file(&out.join("summary.json"), &json)?;
    let title = format!("{} on {} ({})", spec, trace.label(), manifest.title);
    write_file(&out.join("session.svg"), session_svg(&outcomes, Some(&trace), &title))?;
    println!("{json}");
    Ok(())
}

/// Split traces into `workers` pools of neighbouring mean bandwidth.
fn pools_from_traces(mut traces: Vec<Arc<NetworkTrace>>, workers: usize) -> Vec<Vec<Arc<NetworkTrace>>> {
    traces.sort_by(|a, b| a.mean_bandwidth().total_cmp(&b.mean_bandwidth()));
    let n = traces.len();
    (0..workers)
        .map(|w| {
            let (lo, hi) = (w * n / workers, (w + 1) * n / workers);
            if lo < hi {
                traces[lo..hi].to_vec()
            } else {
                vec![traces[w % n].clone()]
            }
        })
        .collect()
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = resolve(&a.common)?;
    if let Some(w) = a.workers {
        cfg.sac.workers = w;
    }
    if let Some(e) = a.episodes {
        cfg.sac.episodes = e;
    }
    if a.single_threaded {
        cfg.sac.threaded = false;
    }
    if let Some(t) = &a.traces {
        cfg.paths.traces_dir = Some(t.clone());
    }
    cfg.validate()?;
    let manifest = resolve_manifest(&cfg)?;
    let workers = cfg.sac.workers;
    let pools = match &cfg.paths.traces_dir {
        Some(dir) => pools_from_traces(load_trace_dir(dir)?, workers),
        None => build_trace_pools(
            &TraceMix::training(),
            workers,
            cfg.media.traces_per_pool,
            cfg.media.trace_duration_s,
            cfg.seed,
        )?,
    };
    let out = cfg.paths.output_dir.clone();
    ensure_dir(&out)?;
    cfg.echo(&out)?;
    let (session, params, seed) = (cfg.session, cfg.sim_params(), cfg.seed);
    let factory = |w: usize| -> Result<Box<dyn Environment>> {
        let env = StreamingEnv::new(
            session,
            params,
            manifest.clone(),
            pools[w].clone(),
            seed.wrapping_add(7919 * (w as u64 + 1)),
        )?;
        Ok(Box::new(env))
    };
    let ckpt_path = out.join("checkpoint.json");
    let outcome = train(&cfg.sac, &factory, Some(&ckpt_path))?;
    outcome.checkpoint().save(&ckpt_path)?;
    if let Some(extra) = &cfg.paths.checkpoint {
        outcome.checkpoint().save(extra)?;
    }
    let log_path = out.join("training_log.csv");
    let file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    write_training_log(&outcome.log, std::io::BufWriter::new(file)).map_err(|e| Error::io(&log_path, e))?;
    let report = serde_json::to_string_pretty(&outcome.report)?;
    write_file(&out.join("train_report.json"), &report)?;
    write_file(&out.join("training.md"), training_markdown(&outcome.report))?;
    println!("{report}");
    Ok(())
}

/// Training-cost table: wall time, throughput and episodes to threshold.
pub fn training_markdown(r: &TrainReport) -> String {
    let reach = r
        .episodes_to_threshold
        .map(|e| e.to_string())
        .unwrap_or_else(|| "not reached".into());
    format!(
        "| workers | threaded | episodes | env steps | updates | wall time (s) | steps/s | episodes to reward >= {:.3} (window {}) | final window reward |\n\
         |---|---|---|---|---|---|---|---|---|\n\
         | {} | {} | {} | {} | {} | {:.1} | {:.1} | {} | {:.4} |\n",
        r.reward_threshold,
        r.threshold_window,
        r.workers,
        r.threaded,
        r.episodes,
        r.total_steps,
        r.updates,
        r.wall_time_s,
        r.steps_per_s,
        reach,
        r.final_window_reward
    )
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut cfg = resolve(&a.common)?;
    if let Some(t) = &a.traces {
        cfg.paths.traces_dir = Some(t.clone());
    }
    cfg.validate()?;
    let dir = cfg
        .paths
        .traces_dir
        .clone()
        .ok_or_else(|| Error::validation("evaluate needs --traces or paths.traces_dir"))?;
    let traces = load_trace_dir(&dir)?;
    let manifest = resolve_manifest(&cfg)?;
    let specs: Vec<ControllerSpec> = a
        .abr
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    if specs.is_empty() {
        return Err(Error::validation("need at least one controller"));
    }
    let controllers: Vec<(String, ControllerFactory)> = specs
        .iter()
        .map(|s| Ok((s.to_string(), spec_factory(s, manifest.ladder.len())?)))
        .collect::<Result<_>>()?;
    let out = cfg.paths.output_dir.clone();
    ensure_dir(&out)?;
    cfg.echo(&out)?;
    let rows = evaluate_with_threads(
        &eval_setup(&cfg),
        &controllers,
        &traces,
        &manifest,
        cfg.evaluation.threads,
    )?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("session {} / {} failed: {}", r.controller, r.trace, r.error.as_deref().unwrap_or(""));
    }
    let aggs = aggregate(&rows);
    write_tables(&out, &rows, &aggs)?;
    let labelled: Vec<serde_json::Value> = aggs.iter().map(aggregate_json).collect();
    let json = serde_json::json!({ "sessions": rows, "aggregates": labelled });
    write_file(&out.join("evaluation.json"), serde_json::to_string_pretty(&json)?)?;
    print!("{}", markdown_table(&aggs));
    Ok(())
}

fn aggregate_json(a: &crate::report::Aggregate) -> serde_json::Value {
    let named = |v: &[f64; 10]| -> serde_json::Map<String, serde_json::Value> {
        SUMMARY_COLUMNS.iter().zip(v).map(|(c, x)| (c.to_string(), serde_json::json!(x))).collect()
    };
    serde_json::json!({
        "controller": a.controller,
        "sessions": a.sessions,
        "failed": a.failed,
        "mean": named(&a.mean),
        "std": named(&a.std),
    })
}

fn write_tables(out: &Path, rows: &[crate::report::EvalRow], aggs: &[crate::report::Aggregate]) -> Result<()> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Error::io(p, e)
    };
    let sessions = out.join("sessions.csv");
    let mut buf = Vec::new();
    write_sessions_csv(rows, &mut buf).map_err(io(&sessions))?;
    write_file(&sessions, buf)?;
    let summary = out.join("summary.csv");
    let mut buf = Vec::new();
    write_aggregate_csv(aggs, &mut buf).map_err(io(&summary))?;
    write_file(&summary, buf)?;
    write_file(&out.join("summary.md"), markdown_table(aggs))
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    require_exists("input directory", &a.input)?;
    let out = a.out.unwrap_or_else(|| a.input.clone());
    ensure_dir(&out)?;
    let mut produced = 0;
    let sessions = a.input.join("sessions.csv");
    if sessions.exists() {
        let text = fs::read_to_string(&sessions).map_err(|e| Error::io(&sessions, e))?;
        let rows = read_sessions_csv(&text, &sessions)?;
        let aggs = aggregate(&rows);
        write_tables(&out, &rows, &aggs)?;
        print!("{}", markdown_table(&aggs));
        produced += 1;
    }
    let train_report = a.input.join("train_report.json");
    if train_report.exists() {
        let text = fs::read_to_string(&train_report).map_err(|e| Error::io(&train_report, e))?;
        let r: TrainReport = serde_json::from_str(&text)?;
        let md = training_markdown(&r);
        write_file(&out.join("training.md"), &md)?;
        print!("{md}");
        produced += 1;
    }
    let mut logs: Vec<PathBuf> = fs::read_dir(&a.input)
        .map_err(|e| Error::io(&a.input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    logs.sort();
    for log in logs {
        let (header, outcomes) = load_step_log(&log)?;
        let title = format!("{} on {} ({})", header.controller, header.trace, header.title);
        let svg = out.join(format!("{}.svg", trace_name(&log)));
        write_file(&svg, session_svg(&outcomes, None, &title))?;
        println!("wrote {}", svg.display());
        produced += 1;
    }
    if produced == 0 {
        return Err(Error::validation(format!(
            "{} holds no sessions.csv, train_report.json or step logs",
            a.input.display()
        )));
    }
    Ok(())
}
