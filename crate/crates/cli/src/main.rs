//! `retro`: CME, channel-capacity, LNA and validation runs from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or solver error.
//! Errors are printed to stderr as one JSON object.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "retro", version, about = "Reaction networks as molecular communication channels")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism). RETRO_THREADS overrides.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact joint pmf, A constants, MI and capacity bounds of one model.
    Analyze(RunConfig),
    /// Capacity bounds over an (A, p0) grid, as CSV plus a gnuplot script.
    Sweep(RunConfig),
    /// Linear-noise approximation report.
    Lna(RunConfig),
    /// Closed form vs CME vs SSA comparison for every preset.
    Validate(RunConfig),
    /// Parse a network file and report its canonical form and conservation laws.
    Parse(RunConfig),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("RETRO_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::config(format!("RETRO_THREADS: expected a positive integer, got `{v}`"))),
        Err(_) => match flag {
            Some(0) => Err(CliError::config("--threads: must be positive")),
            other => Ok(other),
        },
    }
}

fn run(cli: Cli) -> Result<Option<String>, CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::solver(e.to_string()))?;
    }
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Analyze(flags) => commands::analyze(base.overlay(flags)),
        Command::Sweep(flags) => commands::sweep(base.overlay(flags)),
        Command::Lna(flags) => commands::lna(base.overlay(flags)),
        Command::Validate(flags) => commands::validate(base.overlay(flags)),
        Command::Parse(flags) => commands::parse(base.overlay(flags)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(Some(text)) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
