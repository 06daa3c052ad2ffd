//! `cfs`: evaluate, minimize, classify and check discrete causal fermion
//! systems, and build the regularized Minkowski vacuum.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible constraints,
//! 4 construction error, 5 identity-suite failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Failure};
use config::LoadedConfig;

#[derive(Parser)]
#[command(
    name = "cfs",
    version,
    about = "Numerical toolkit for finite-dimensional causal fermion systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Volume, trace integral, boundedness functional and action of a measure.
    Action(Args),
    /// Minimize the causal action under the volume, trace and boundedness constraints.
    Minimize(Args),
    /// Causal relation of every pair of support points.
    Classify(Args),
    /// Build the regularized Minkowski vacuum and compare its causal structure.
    Minkowski(Args),
    /// Run the randomized identity suite.
    Check(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("CFS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::input(anyhow::anyhow!(
            "CFS_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(Failure::input)
}

fn run(command: &Command) -> Result<(), Failure> {
    configure_threads()?;
    let args = match command {
        Command::Action(a)
        | Command::Minimize(a)
        | Command::Classify(a)
        | Command::Minkowski(a)
        | Command::Check(a) => a,
    };
    let config = LoadedConfig::read(&args.config).map_err(Failure::input)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| config.base.join(&config.run.output.dir));
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::input(anyhow::anyhow!("cannot create {}: {e}", out.display())))?;
    let fallback = config.run.minimize.as_ref().map_or(0, |m| m.seed);
    let seed = args.seed.or(config.run.seed).unwrap_or(fallback);
    let ctx = Context { config, out, seed };
    match command {
        Command::Action(_) => commands::action(&ctx),
        Command::Minimize(_) => commands::minimize(&ctx),
        Command::Classify(_) => commands::classify_pairs(&ctx),
        Command::Minkowski(_) => commands::minkowski(&ctx),
        Command::Check(_) => commands::check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code as u8)
        }
    }
}
