use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use thiserror::Error;

mod commands;
mod config;
mod output;
mod plot;

use commands::Run;
use config::{ConfigError, RunConfig};
use output::OutDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] fadrc::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("plot: {0}")]
    Plot(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("FADRC_THREADS: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Approximation error curves of the IFO and FO observer loops.
    Mse,
    /// Open-loop Bode curves, crossovers and phase margins.
    Bode,
    /// Closed-loop step responses and gain sweeps.
    Step,
    /// PD design matching the IFO loop's crossover and margin.
    Design,
    /// Observer, closed-loop and Routh stability checks.
    Stability,
    /// Step responses of the motor speed loop.
    Pmsm,
}

/// Fractional-order ADRC analysis and simulation.
#[derive(Debug, Parser)]
#[command(name = "fadrc", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also render SVG figures.
    #[arg(long)]
    plots: bool,
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("FADRC_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Threads(e.to_string())),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Threads(format!("expected a positive integer, got '{v}'"))),
        },
    }
}

fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let mut run = Run { cfg: &cfg, out: OutDir::create(&cli.out)?, plots: cli.plots, failures: Vec::new() };
    match cli.command {
        Command::Mse => commands::mse(&mut run),
        Command::Bode => commands::bode(&mut run),
        Command::Step => commands::step(&mut run),
        Command::Design => commands::design(&mut run),
        Command::Stability => commands::stability(&mut run),
        Command::Pmsm => commands::pmsm(&mut run),
    }?;
    for path in run.out.written() {
        println!("{}", path.display());
    }
    Ok(run.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_cap().and_then(|cap| match cap {
        None => execute(&cli),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Threads(e.to_string()))?
            .install(|| execute(&cli)),
    });
    match result {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("fadrc: {f}");
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("fadrc: {e}");
            ExitCode::FAILURE
        }
    }
}
