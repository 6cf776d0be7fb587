//! Command-line front end for `sdelab`: every experiment is driven by a TOML
//! config, writes CSV tables into an output directory, and leaves a
//! `manifest.toml` from which the run can be replayed byte for byte.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config error, 3 infeasible regime,
//! 4 numeric failure.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use commands::{Experiment, Summary};
use config::{BuildStamp, Command, ConfigFile, DEFAULT_SEED};
pub use error::{CliError, Result};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Action {
    Regimes,
    Noise,
    Scaling,
    Variation,
    Counterexample,
    Stability,
    Sewing,
    /// Take the command from the config's `command` key (replays a manifest).
    Run,
}

impl Action {
    fn command(self) -> Option<Command> {
        Some(match self {
            Action::Regimes => Command::Regimes,
            Action::Noise => Command::Noise,
            Action::Scaling => Command::Scaling,
            Action::Variation => Command::Variation,
            Action::Counterexample => Command::Counterexample,
            Action::Stability => Command::Stability,
            Action::Sewing => Command::Sewing,
            Action::Run => return None,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "sdelab", version, about = "Experiments for SDEs with singular drift and fractional or stable noise")]
pub struct Cli {
    pub action: Action,

    /// TOML config; missing tables take their defaults.
    #[arg(long, env = "SDELAB_CONFIG")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config's `seed`.
    #[arg(long, env = "SDELAB_SEED")]
    pub seed: Option<u64>,

    /// Worker threads (results do not depend on it).
    #[arg(long, env = "SDELAB_WORKERS")]
    pub workers: Option<usize>,

    /// Output directory, created if missing.
    #[arg(long, env = "SDELAB_OUT", default_value = "sdelab-out")]
    pub out: PathBuf,
}

/// Where a run wrote its tables, and the lines printed after it.
#[derive(Debug)]
pub struct RunReport {
    pub command: Command,
    pub out: PathBuf,
    pub summary: Summary,
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let command = match (cli.action.command(), file.command) {
        (Some(c), _) => c,
        (None, Some(c)) => c,
        (None, None) => {
            return Err(CliError::Config(
                "`run` needs a config with a top-level `command` key".into(),
            ))
        }
    };
    if let Some(b) = &file.build {
        let now = BuildStamp::current();
        if *b != now {
            eprintln!(
                "warning: config was written by {} {}, running {} {}",
                b.package, b.version, now.package, now.version
            );
        }
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    match cli.workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| dispatch(command, &file, seed, &cli.out)),
        None => dispatch(command, &file, seed, &cli.out),
    }
}

fn dispatch(command: Command, file: &ConfigFile, seed: u64, out: &Path) -> Result<RunReport> {
    use config::*;
    let summary = match command {
        Command::Regimes => execute::<RegimesConfig>(file, seed, out),
        Command::Noise => execute::<NoiseConfig>(file, seed, out),
        Command::Scaling => execute::<ScalingConfig>(file, seed, out),
        Command::Variation => execute::<VariationConfig>(file, seed, out),
        Command::Counterexample => execute::<CounterexampleConfig>(file, seed, out),
        Command::Stability => execute::<StabilityConfig>(file, seed, out),
        Command::Sewing => execute::<SewingConfig>(file, seed, out),
    }?;
    Ok(RunReport {
        command,
        out: out.to_path_buf(),
        summary,
    })
}

/// Resolves the command's table, writes the manifest, then runs.
fn execute<E: Experiment>(file: &ConfigFile, seed: u64, out: &Path) -> Result<Summary> {
    let mut cfg = E::section(file).cloned().unwrap_or_default();
    cfg.resolve(seed)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut manifest = ConfigFile {
        command: Some(E::COMMAND),
        seed: Some(seed),
        build: Some(BuildStamp::current()),
        ..ConfigFile::default()
    };
    cfg.clone().store(&mut manifest);
    output::write_text(out, MANIFEST, &manifest.to_toml())?;
    cfg.run(seed, out)
}
