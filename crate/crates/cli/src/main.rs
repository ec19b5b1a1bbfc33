//! `tripgym` command-line tool. Exit codes are listed in `--help`.

mod args;
mod commands;
mod error;
mod replay;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use args::{Cli, Command};

/// Logs go to stderr. `serve` writes JSON lines at info by default; the
/// other commands write plain text at warn unless `-v` is given.
fn init_logging(json: bool, verbose: u8) {
    let default = match (json, verbose) {
        (_, 2..) => "debug",
        (true, _) | (_, 1) => "info",
        _ => "warn",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let builder = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr);
    if json {
        builder.json().init();
    } else {
        builder.without_time().with_target(false).init();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(matches!(cli.command, Command::Serve(_)), cli.verbose);
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Run(a) => commands::run(a),
        Command::Replay(a) => replay::replay(a),
        Command::Report(a) => commands::report(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
