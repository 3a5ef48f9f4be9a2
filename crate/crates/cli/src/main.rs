//! `plrank`: batch command-line front end.
//!
//! Exit codes: 0 success, 1 invalid flags/config/input, 2 I/O failure,
//! 3 numeric failure (non-finite loss).

mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, FileConfig, Merge};
use commands::Context;
use error::CliError;

fn load_config(cli: &Cli) -> Result<FileConfig, CliError> {
    let Some(path) = &cli.config else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = load_config(&cli)?;
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        quiet: cli.quiet || file.quiet.unwrap_or(false),
        output: cli.output.or(file.output),
    };
    match cli.command {
        Command::Synth(a) => commands::synth(&ctx, a.merge(file.synth)),
        Command::Fit(a) => commands::fit(&ctx, a.merge(file.fit)),
        Command::Train(a) => commands::train(&ctx, a.merge(file.train)),
        Command::Predict(a) => commands::predict(&ctx, a.merge(file.predict)),
        Command::Evaluate(a) => commands::evaluate(&ctx, a.merge(file.evaluate)),
        Command::Sample(a) => commands::sample(&ctx, a.merge(file.sample)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
