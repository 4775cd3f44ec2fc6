//! Command-line frontend: argument parsing, subcommands and report files.
//!
//! Exit codes: 0 success, 2 usage, 3 malformed input (schema, parse,
//! p-values), 4 I/O, 5 invalid configuration, 6 analysis failure.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{exit, CliError, CliResult};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a).map(drop),
        Command::Simulate(a) => commands::simulate(a),
        Command::Diagnose(a) => commands::diagnose(a).map(drop),
        Command::Qvalues(a) => commands::qvalues_cmd(a),
    }
}

/// Parses `argv` and runs it, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
