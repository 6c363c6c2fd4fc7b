//! `idealflow`: compute, simulate, calibrate, replay edits and serve.
//!
//! Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 environment
//! (bind or write failure).

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if matches!(cli.command, args::Command::Serve(_)) {
        tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
