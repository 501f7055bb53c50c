//! `mfdr` command-line tool.
//!
//! Exit codes: 0 success, 1 output failure, 2 bad flags or unreadable input,
//! 3 numerical failure.

mod args;
mod commands;
mod output;

use std::io;
use std::process::ExitCode;

use clap::Parser;
use mfdr::MfdrError;

use args::{Cli, Command};
use output::Outputs;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(MfdrError),
    Output(io::Error),
}

impl CliError {
    fn csv(e: csv::Error) -> Self {
        CliError::Output(io::Error::other(e))
    }

    pub fn exit_code(&self) -> u8 {
        use MfdrError::*;
        match self {
            CliError::Output(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                ParseError { .. }
                | MissingColumn(_)
                | NonNumericCell { .. }
                | Io(_)
                | InvalidResponse(_)
                | FamilyMismatch { .. }
                | DimensionMismatch(_)
                | ConstantColumn(_)
                | TooFewObservations { .. }
                | InvalidGrid(_)
                | InvalidScenario(_)
                | RequiresReplicates => 2,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
            CliError::Output(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<MfdrError> for CliError {
    fn from(e: MfdrError) -> Self {
        CliError::Core(e)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut out = Outputs::default();
    match &cli.command {
        Command::Fit(a) => commands::fit(a, &mut out)?,
        Command::Cv(a) => commands::cv(a, &mut out)?,
        Command::Mfdr(a) => commands::mfdr(a, &mut out)?,
        Command::Univariate(a) => commands::univariate(a, &mut out)?,
        Command::PathExport(a) => commands::path_export(a, &mut out)?,
        Command::Simulate(a) => commands::simulate(a, &mut out)?,
    }
    out.commit().map_err(CliError::Output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
