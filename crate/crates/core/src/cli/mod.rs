//! Command-line front end: config loading, run manifests and report files.
//!
//! Every run writes `manifest.json` into the output directory before the
//! experiment starts and rewrites it with the final status afterwards. Exit
//! codes: 0 pass, 1 check failed or inconclusive, 2 config error, 3 runtime error.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_couple, cmd_explosion, cmd_geometry_check, cmd_gradient, geometry_check, ExplosionCaseResult,
    GeometryCheckReport, Outcome, RunContext, KAPPA_BOUND_TOL,
};
pub use config::{load, CommandConfig, ConfigDiagnostic, ExplosionCase, ExplosionRunConfig, GeometryCheckConfig};
pub use output::{canonicalize, cell, config_hash, write_json, CsvCell, CsvTable, OutputEntry, RunManifest, RunStatus};

use crate::error::Error;
use crate::harness::ExperimentConfig;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ricci-couple", version, about = "Coupled geodesic random walks under evolving metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form vs numeric geometry, curvature condition and metric-growth rate of a model.
    GeometryCheck(CommonArgs),
    /// Coupling-time tails (reflection) or distance contraction (parallel).
    Couple(CommonArgs),
    /// Difference quotients of P_t f against the gradient bound.
    Gradient(CommonArgs),
    /// Non-explosion verdicts of radial comparison diffusions.
    Explosion(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", env = "RICCI_COUPLE_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads (default: machine parallelism).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Fail on warnings and on inconclusive verdicts.
    #[arg(long)]
    pub strict: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GeometryCheck(_) => "geometry-check",
            Command::Couple(_) => "couple",
            Command::Gradient(_) => "gradient",
            Command::Explosion(_) => "explosion",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::GeometryCheck(a) | Command::Couple(a) | Command::Gradient(a) | Command::Explosion(a) => a,
        }
    }
}

/// Parse `std::env::args` and run; returns the process exit code.
pub fn main() -> i32 {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> i32 {
    let name = cli.command.name();
    let args = cli.command.args().clone();
    match &cli.command {
        Command::GeometryCheck(_) => execute::<GeometryCheckConfig>(name, &args, cmd_geometry_check),
        Command::Couple(_) => execute::<ExperimentConfig>(name, &args, cmd_couple),
        Command::Gradient(_) => execute::<ExperimentConfig>(name, &args, cmd_gradient),
        Command::Explosion(_) => execute::<ExplosionRunConfig>(name, &args, cmd_explosion),
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e.root(), Error::InvalidSpec { .. } | Error::Config(_))
}

fn execute<C: CommandConfig>(
    name: &str,
    args: &CommonArgs,
    body: impl FnOnce(&C, &RunContext) -> crate::error::Result<Outcome>,
) -> i32 {
    let config_error = |d: ConfigDiagnostic| {
        eprintln!("{name}: config error: {d}");
        EXIT_CONFIG
    };
    let mut cfg: C = match load(&args.config) {
        Ok(c) => c,
        Err(d) => return config_error(d),
    };
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Err(e) = cfg.validate() {
        return config_error(ConfigDiagnostic::from_error(&args.config, e));
    }
    let hash = match config_hash(&cfg) {
        Ok(h) => h,
        Err(e) => return config_error(ConfigDiagnostic::from_error(&args.config, e)),
    };
    cfg.set_workers(args.workers);
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("{name}: cannot create {}: {e}", args.out.display());
        return EXIT_RUNTIME;
    }
    let workers = args
        .workers
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        config_path: args.config.clone(),
        config_hash: hash.clone(),
        seed: cfg.seed(),
        workers,
        started_at: chrono::Utc::now().to_rfc3339(),
        finished_at: None,
        status: RunStatus::Running,
        exit_code: None,
        message: None,
        outputs: Vec::new(),
    };
    if let Err(e) = manifest.write(&args.out) {
        eprintln!("{name}: {e}");
        return EXIT_RUNTIME;
    }
    let ctx = RunContext {
        out: args.out.clone(),
        config_hash: hash,
        strict: args.strict,
    };
    let (status, code, message) = match body(&cfg, &ctx) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("{name}: warning: {w}");
            }
            println!("{}", outcome.summary);
            for o in &outcome.outputs {
                println!("  wrote {}", display(&args.out, &o.path));
            }
            manifest.outputs = outcome.outputs;
            if args.strict && outcome.pass && !outcome.warnings.is_empty() {
                let msg = format!("{} warning(s) under --strict", outcome.warnings.len());
                eprintln!("{name}: {msg}");
                (RunStatus::Fail, EXIT_FAIL, Some(msg))
            } else if outcome.pass {
                (RunStatus::Pass, EXIT_PASS, None)
            } else {
                (RunStatus::Fail, EXIT_FAIL, Some(outcome.summary))
            }
        }
        Err(e) if is_config_error(&e) => {
            eprintln!("{name}: config error: {}", ConfigDiagnostic::from_error(&args.config, e.root().clone()));
            (RunStatus::ConfigError, EXIT_CONFIG, Some(e.to_string()))
        }
        Err(e) => {
            eprintln!("{name}: runtime error: {e}");
            (RunStatus::RuntimeError, EXIT_RUNTIME, Some(e.to_string()))
        }
    };
    manifest.finish(status, code, message);
    if let Err(e) = manifest.write(&args.out) {
        eprintln!("{name}: {e}");
        return EXIT_RUNTIME;
    }
    code
}

fn display(dir: &Path, file: &Path) -> String {
    dir.join(file).display().to_string()
}
