use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sthc_core::Error;

mod commands;
mod config;

use config::{EvalArgs, FileConfig, PlanArgs, SynthArgs, TrainArgs};

pub const EXIT_IO: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_OPTICS: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

/// Spatio-temporal holographic correlator simulator and hybrid video
/// classifier.
#[derive(Debug, Parser)]
#[command(name = "sthc", version)]
struct Cli {
    /// TOML file with [synth], [train], [eval] or [plan] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic motion-direction dataset.
    Synth(SynthArgs),
    /// Train the digital baseline and export its parameters.
    Train(TrainArgs),
    /// Evaluate a trained model digitally or through the optical layer.
    Eval(EvalArgs),
    /// Loading time, throughput and database segmentation.
    Plan(PlanArgs),
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Ingestion { .. } | Error::Format(_) | Error::Manifest(_) => {
                EXIT_IO
            }
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            Error::Crosstalk { .. }
            | Error::LayoutCapacity { .. }
            | Error::Layout(_)
            | Error::Encoding(_)
            | Error::Timing(_)
            | Error::NumericalConsistency { .. } => EXIT_OPTICS,
            Error::Parameter(_) | Error::InfeasibleOverlap { .. } | Error::Dimension(_) => {
                EXIT_USAGE
            }
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => commands::synth(a.merge(file.synth)),
        Command::Train(a) => commands::train(a.merge(file.train)),
        Command::Eval(a) => commands::eval(a.merge(file.eval)),
        Command::Plan(a) => commands::plan(a.merge(file.plan)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sthc: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
