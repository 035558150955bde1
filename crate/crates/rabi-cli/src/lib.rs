//! Command-line companion to `rabi-core`: argument and config-file handling,
//! deterministic CSV/JSON emitters, independent numerical oracles, parallel
//! Monte Carlo drivers, and a self-contained validation suite.
//!
//! Exit status contract, stable across versions:
//!
//! * 0 - success
//! * 1 - configuration error (bad flag, bad config file, invalid parameters)
//! * 2 - a computation failed after configuration was accepted
//! * 3 - the computation ran but a check it performs did not pass
//!
//! Errors are written to stderr as a single line, `error: <kind>: <detail>`.

pub mod commands;
pub mod config;
pub mod oracle;
pub mod output;
pub mod parallel;
pub mod validate;

use std::fmt;
use std::fs;
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};

/// Failure classes, each mapped to its own exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Rejected before any computation started. Exit status 1.
    Config(String),
    /// The computation itself failed. Exit status 2.
    Compute(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "error: config: {msg}"),
            CliError::Compute(msg) => write!(f, "error: compute: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Compute(_) => ExitCode::from(2),
        }
    }
}

pub fn run_main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help and --version as "errors"; pass them through
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let (io, rendered) = match &cli.command {
        Command::JcSpectrum(args) => (&args.io, commands::jc_spectrum(args)),
        Command::JcCrossings(args) => (&args.io, commands::jc_crossings(args)),
        Command::RabiSweep(args) => (&args.io, commands::rabi_sweep(args)),
        Command::CheckC1(args) => (&args.io, commands::check_c1_cmd(args)),
        Command::CountCrossings(args) => (&args.io, commands::count_crossings(args)),
        Command::FkEnergy(args) => (&args.io, commands::fk_energy(args)),
        Command::FkPositivity(args) => (&args.io, commands::fk_positivity(args)),
        Command::Validate(args) => (&args.io, commands::validate_cmd(args)),
    };

    let rendered = match rendered {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };

    // the output is written even when a check failed: a failing run must
    // still leave its evidence behind
    match &io.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &rendered.text) {
                eprintln!("error: compute: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{}", rendered.text),
    }

    match rendered.failure {
        Some(msg) => {
            eprintln!("error: validation: {msg}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    }
}
