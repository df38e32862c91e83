use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dwell::config::RunConfig;
use dwell::error::ConfigError;
use dwell::{run, Error, ErrorKind};

/// Double-well tunneling and decoherence in an Ohmic zero-temperature bath.
#[derive(Debug, Parser)]
#[command(name = "dwell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the spectrum and print the tunneling-time summary.
    Eigen(Args),
    /// Run the closed and/or open evolution and write observables and Wigner snapshots.
    Evolve(Args),
    /// Run open evolutions over a list of cutoffs (and optionally coupling strengths).
    SweepCutoff(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Configuration file; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn exit_code(kind: ErrorKind) -> ExitCode {
    match kind {
        ErrorKind::Input => ExitCode::from(2),
        ErrorKind::Numerical => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Eigen(a) | Command::Evolve(a) | Command::SweepCutoff(a) => a,
    };
    let config = match load(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let hash = config.hash();
    let result: Result<ExitCode, Error> = match &cli.command {
        Command::Eigen(_) => run::cmd_eigen(&config, &args.out).map(|s| {
            print!("{s}");
            ExitCode::SUCCESS
        }),
        Command::Evolve(_) => run::cmd_evolve(&config, &args.out).map(|s| {
            print!("{s}");
            ExitCode::SUCCESS
        }),
        Command::SweepCutoff(_) => run::cmd_sweep_cutoff(&config, &args.out).map(|s| {
            print!("{s}");
            if s.failures() > 0 {
                eprintln!("{} of {} sweep runs failed; see {}", s.failures(), s.members.len(), run::FAILURES_FILE);
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [config_hash={hash}]: {e}");
            exit_code(e.kind())
        }
    }
}
