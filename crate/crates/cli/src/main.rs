mod args;
mod config;
mod design;
mod error;
mod output;
mod processor;
mod run;
mod schedule;
mod verify;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, CONFIG_ENV};
use error::CliResult;

/// Parses the command line, folding in the config file if there is one.
/// Clap handles `--help` and usage errors itself (exit 0 and 2).
fn parse(argv: Vec<OsString>) -> CliResult<Cli> {
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    let Some(path) = path else {
        return Ok(cli);
    };
    let entries = config::read_config(&path)?;
    let merged = config::splice(&argv, cli.command.name(), &entries)?;
    Ok(Cli::try_parse_from(merged).unwrap_or_else(|e| e.exit()))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Design(a) => design::cmd_design(a),
        Command::Run(a) => run::cmd_run(a),
        Command::Verify(a) => verify::cmd_verify(a),
        Command::Schedule(a) => schedule::cmd_schedule(a),
    }
}

fn main() -> ExitCode {
    match parse(std::env::args_os().collect()).and_then(|cli| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
