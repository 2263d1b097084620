use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dampwave::atlas;
use dampwave::harness::config::set_path;
use dampwave::harness::output::{emit, prepare_dir};
use dampwave::harness::{execute, ExperimentConfig};
use serde_json::Value;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "dampwave", version, about = "Damped wave equation experiments")]
struct Cli {
    /// Worker threads for parallel sweeps and ladders (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a single (n, γ, p) point.
    Classify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Rasterize the (γ, p) plane.
    Atlas {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        size: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    Simulate(RunArgs),
    Decay(RunArgs),
    Lifespan(RunArgs),
    Sweep(RunArgs),
    BumpCheck(RunArgs),
    Testfunc(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a key: `--set data/gamma=0.4` (value parsed as JSON, else taken as a string).
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    /// Exit with status 4 if the experiment's checks fail.
    #[arg(long)]
    check: bool,
}

enum Failure {
    Config(String),
    Numerical(String),
}

fn load_doc(path: Option<&Path>) -> Result<Value, Failure> {
    match path {
        None => Ok(Value::Object(Default::default())),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(|e| Failure::Config(format!("{e:#}")))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn build_config(kind: &str, run: &RunArgs, extra: Vec<(String, Value)>) -> Result<ExperimentConfig, Failure> {
    let mut doc = load_doc(run.config.as_deref())?;
    if !doc.is_object() {
        return Err(Failure::Config("config must be a JSON object".into()));
    }
    match doc.get("kind").and_then(Value::as_str) {
        Some(k) if k != kind => {
            return Err(Failure::Config(format!(
                "config kind {k:?} does not match subcommand {kind:?}"
            )))
        }
        Some(_) => {}
        None => doc["kind"] = Value::from(kind),
    }
    if doc.get("schema").is_none() && run.config.is_none() {
        doc["schema"] = Value::from(dampwave::harness::config::SCHEMA);
    }
    let config_err = |e: dampwave::Error| Failure::Config(e.to_string());
    for (k, v) in extra {
        set_path(&mut doc, &k, v).map_err(config_err)?;
    }
    for item in &run.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set {item:?} needs PATH=VALUE")))?;
        let v = serde_json::from_str(v).unwrap_or_else(|_| Value::from(v));
        set_path(&mut doc, k, v).map_err(config_err)?;
    }
    if let Some(seed) = run.seed {
        doc["seed"] = Value::from(seed);
    }
    ExperimentConfig::from_value(doc).map_err(config_err)
}

fn run_experiment(kind: &str, run: &RunArgs, extra: Vec<(String, Value)>) -> Result<ExitCode, Failure> {
    let cfg = build_config(kind, run, extra)?;
    prepare_dir(&run.out).map_err(|e| Failure::Config(e.to_string()))?;
    let out = execute(&cfg).map_err(|e| {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    })?;
    let paths = emit(&run.out, &out).map_err(|e| Failure::Config(e.to_string()))?;
    for p in &paths {
        log::info!("wrote {}", p.display());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&out.summary["results"]).unwrap_or_default()
    );
    if let Some(e) = out.failure {
        return Err(Failure::Numerical(format!(
            "{e} (partial results in {})",
            run.out.display()
        )));
    }
    if run.check && out.passed == Some(false) {
        eprintln!("check failed for {} ({})", out.kind, &out.hash[..12]);
        return Ok(ExitCode::from(EXIT_CHECK));
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Classify { n, gamma, p, s } => {
            let v = atlas::classify(n, gamma, p, s).map_err(|e| Failure::Config(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            Ok(ExitCode::SUCCESS)
        }
        Command::Atlas { n, size, run } => {
            let mut extra = Vec::new();
            if let Some(n) = n {
                extra.push(("n".to_string(), Value::from(n)));
            }
            if let Some(size) = size {
                extra.push(("size".to_string(), Value::from(size)));
            }
            run_experiment("atlas", &run, extra)
        }
        Command::Simulate(r) => run_experiment("simulate", &r, vec![]),
        Command::Decay(r) => run_experiment("decay", &r, vec![]),
        Command::Lifespan(r) => run_experiment("lifespan", &r, vec![]),
        Command::Sweep(r) => run_experiment("sweep", &r, vec![]),
        Command::BumpCheck(r) => run_experiment("bump_check", &r, vec![]),
        Command::Testfunc(r) => run_experiment("testfunc", &r, vec![]),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
