//! `ubaforest` command-line front end.
//!
//! Exit codes: 0 success, 2 usage/config/I-O error, 3 data-quality failure,
//! 4 internal error. Every flag also reads `UBAFOREST_<FLAG>` from the
//! environment.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use ubaforest::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DataQuality(_)
            | Error::MalformedLine { .. }
            | Error::BadTimestamp { .. }
            | Error::InsufficientData { .. }
            | Error::Csv(_) => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "ubaforest", version, about = "Per-user isolation forest baselines for access logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse raw logs into a per-user record store.
    Ingest(commands::IngestArgs),
    /// Fit one baseline model per user of a record store.
    Train(commands::TrainArgs),
    /// Score log records against trained models.
    Score(commands::ScoreArgs),
    /// Run the repeated train/test comparison of feature systems.
    Evaluate(commands::EvaluateArgs),
    /// Generate a synthetic corpus from a spec file.
    Synth(commands::SynthArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Train(a) => commands::train(a),
        Command::Score(a) => commands::score(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Synth(a) => commands::synth(a),
    }
}

/// Parses arguments; on a usage error prints the relevant usage line too.
fn parse_args() -> Result<Cli, ExitCode> {
    Cli::try_parse().map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            let mut cmd = Cli::command();
            cmd.build();
            let sub = std::env::args().nth(1).unwrap_or_default();
            let usage = match cmd.find_subcommand_mut(&sub) {
                Some(s) => s.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("\n{usage}");
        }
        ExitCode::from(e.exit_code() as u8)
    })
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
