//! `bevc` command-line front end.
//!
//! Exit codes: 0 completed, 2 invalid input, 3 numerical failure, 4 I/O.

mod args;
mod commands;
mod error;
mod source;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliResult;

fn run(cli: &Cli) -> CliResult<()> {
    let settings = commands::Settings::from_global(&cli.global)?;
    match &cli.command {
        Command::Build { source } => commands::build(source, &cli.global, &settings),
        Command::Certify(a) => commands::certify_cmd(a, &cli.global, &settings),
        Command::Scan(a) => commands::scan(a, &cli.global, &settings),
        Command::OpticsVerify(a) => commands::optics_verify(a, &cli.global),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bevc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
