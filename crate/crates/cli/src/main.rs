//! `qseg`: transform, reconstruct, evaluate, synth and codebook commands.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 invariant
//! violation in the inputs.

mod args;
mod commands;
mod error;
mod layout;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::EXIT_USAGE;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Transform(a) => commands::transform(a, cli.jobs),
        Command::Reconstruct(a) => commands::reconstruct(a, cli.jobs),
        Command::Evaluate(a) => commands::evaluate_cmd(a, cli.jobs),
        Command::Synth(a) => commands::synth(a, cli.jobs),
        Command::Codebook(a) => commands::codebook(a, cli.jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qseg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
