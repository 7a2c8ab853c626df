//! Command-line harness: mask generation, forward runs, evaluation and
//! report tables.
//!
//! Exit codes: 0 ok, 2 io, 3 config (including bad arguments),
//! 4 alignment, 5 schema. `RAF_THREADS` caps the worker pool; outputs do
//! not depend on it.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub mod config;
pub mod error;
pub mod eval;
pub mod forward;
pub mod gen_masks;
pub mod report;

pub use config::RunConfig;
pub use error::{CliError, CliResult, ExitCode};

pub const THREADS_ENV: &str = "RAF_THREADS";

#[derive(Debug, Parser)]
#[command(name = "raformer", version, about = "Redundancy-aware video wire inpainting harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one pseudo wire-shaped mask sequence.
    GenMasks {
        #[command(flatten)]
        run: RunArgs,
        /// Number of wires.
        #[arg(long)]
        num: Option<usize>,
        /// Number of frames.
        #[arg(long)]
        len: Option<usize>,
    },
    /// Run the seeded model over every clip of a manifest.
    Forward {
        #[command(flatten)]
        run: RunArgs,
        /// Clip manifest (overrides the config's `manifest`)
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Weight container to load instead of seeded initialization.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Score predictions against ground truth and write a metric CSV.
    Eval {
        /// Manifest of predicted clips.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth manifest (frames and masks).
        #[arg(long)]
        manifest: PathBuf,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a comparison table from metric CSVs (`path` or `label=path`).
    Report {
        /// Metric CSVs, each `path` or `label=path`
        #[arg(required = true)]
        inputs: Vec<String>,
        /// One row per input (aggregate values) instead of one column group per input.
        #[arg(long)]
        by_row: bool,
    },
}

fn resolve_run(run: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(run.config.as_deref())?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &run.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn required(path: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    path.clone()
        .ok_or_else(|| CliError::config(format!("--{name} is required (flag or config)")))
}

/// Executes a parsed command; standard output carries only report tables.
pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::GenMasks { run, num, len } => {
            let mut cfg = resolve_run(&run)?;
            if let Some(n) = num {
                cfg.wire.num = n;
            }
            if let Some(l) = len {
                cfg.len = l;
            }
            let cfg = cfg.resolve()?;
            let out = required(&cfg.out, "out")?;
            config::echo("gen-masks", &cfg.to_json());
            gen_masks::run(&cfg, &out)
        }
        Command::Forward { run, manifest, weights } => {
            let mut cfg = resolve_run(&run)?;
            if manifest.is_some() {
                cfg.manifest = manifest;
            }
            if weights.is_some() {
                cfg.weights = weights;
            }
            let mut cfg = cfg.resolve()?;
            let manifest = required(&cfg.manifest, "manifest")?;
            let out = required(&cfg.out, "out")?;
            let model = forward::build_model(&cfg.model, cfg.weights.as_deref())?;
            cfg.model = model.config().resolved();
            config::echo("forward", &cfg.to_json());
            fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let echo_path = out.join("config.json");
            fs::write(&echo_path, cfg.to_replay_json()).map_err(|e| CliError::io(&echo_path, e))?;
            forward::run(&model, &manifest, &out).map(|_| ())
        }
        Command::Eval { pred, manifest, out } => {
            let effective = json!({ "pred": pred, "manifest": manifest, "out": out });
            config::echo("eval", &serde_json::to_string_pretty(&effective).expect("json"));
            eval::run(&pred, &manifest, &out).map(|_| ())
        }
        Command::Report { inputs, by_row } => {
            let effective = json!({ "inputs": inputs, "by_row": by_row });
            config::echo("report", &serde_json::to_string_pretty(&effective).expect("json"));
            let table = report::run(&inputs, by_row)?;
            print!("{table}");
            Ok(())
        }
    }
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::config(format!("{THREADS_ENV}={v:?} must be a positive integer"))),
        },
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Config as i32 } else { ExitCode::Ok as i32 };
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        None => execute(cli.command),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?
            .install(|| execute(cli.command)),
    });
    match result {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.code as i32
        }
    }
}
