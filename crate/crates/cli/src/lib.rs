//! Command-line runner: config parsing, orchestration and artifact output.

pub mod commands;
pub mod config;
pub mod output;
pub mod values;

use clap::{Args, Parser, Subcommand};
use commands::{execute, CliError};
use config::{load_config, RunConfig};
use output::OutputDir;
use std::ffi::OsString;
use std::path::PathBuf;

/// Default output root when neither `--out` nor `out` is given.
pub const OUT_ROOT_ENV: &str = "BEES_OUT_ROOT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_ROW: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bees", version, about = "Brownian bees simulations and obstacle-problem solver")]
struct Cli {
    /// Config file in `key = value` format with `[section]` blocks.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// `KEY=VALUE` settings for this subcommand's section.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one N-BBM trajectory.
    Simulate(Overrides),
    /// Certified lower/upper bracket of the obstacle problem.
    Solve(Overrides),
    /// Stationary profile and its checks.
    Stationary(Overrides),
    /// Particle profile against the certified bracket.
    Hydro(Overrides),
    /// Furthest particle against the free boundary.
    Boundary(Overrides),
    /// Long-time profile against the stationary state.
    Selection(Overrides),
    /// Window averages after a burn-in.
    Stationarity(Overrides),
    /// Kernel table `d,y,r,t,w,g,G`.
    KernelDump(Overrides),
}

impl Command {
    fn split(&self) -> (&'static str, &[String]) {
        match self {
            Command::Simulate(o) => ("simulate", &o.set),
            Command::Solve(o) => ("solve", &o.set),
            Command::Stationary(o) => ("stationary", &o.set),
            Command::Hydro(o) => ("hydro", &o.set),
            Command::Boundary(o) => ("boundary", &o.set),
            Command::Selection(o) => ("selection", &o.set),
            Command::Stationarity(o) => ("stationarity", &o.set),
            Command::KernelDump(o) => ("kernel-dump", &o.set),
        }
    }
}

fn report_error(command: &str, err: &CliError) {
    let record = serde_json::json!({
        "error": { "command": command, "kind": err.kind(), "message": err.to_string() }
    });
    eprintln!("{record}");
}

fn resolve(cli: &Cli, command: &str, overrides: &[String]) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    for o in overrides {
        cfg.apply_override(command, o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.common.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.common.workers = w;
    }
    if let Some(out) = &cli.out {
        cfg.common.out = Some(out.display().to_string());
    }
    let dir = match &cfg.common.out {
        Some(o) => PathBuf::from(o),
        None => std::env::var_os(OUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("bees-out"))
            .join(command),
    };
    Ok((cfg, dir))
}

fn run_command(cfg: &RunConfig, command: &str, dir: PathBuf) -> Result<bool, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.common.workers)
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let mut out = OutputDir::create(dir)?;
    let passed = pool.install(|| execute(command, cfg, &mut out))?;
    out.finish(command)?;
    Ok(passed)
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, overrides) = cli.command.split();
    let outcome = resolve(&cli, command, overrides).and_then(|(cfg, dir)| {
        let shown = dir.display().to_string();
        run_command(&cfg, command, dir).map(|p| (p, shown))
    });
    match outcome {
        Ok((passed, dir)) => {
            println!("{command}: {} ({dir})", if passed { "pass" } else { "FAIL" });
            if passed {
                EXIT_OK
            } else {
                EXIT_FAILED_ROW
            }
        }
        Err(e) => {
            report_error(command, &e);
            EXIT_ERROR
        }
    }
}
