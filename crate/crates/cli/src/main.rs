//! `gardentrack` command-line front end.
//!
//! Every command prints a JSON summary on stdout. Failures print
//! `{"error": <kind>, "message": <text>}` on stderr and exit nonzero
//! (2 for configuration and usage errors, 1 otherwise).

mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use crate::args::Cli;
use crate::config::ConfigFile;
use crate::error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError {
                exit_code: 2,
                ..CliError::new("Usage", e.render().to_string().trim())
            };
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let filter = EnvFilter::try_new(&cli.log).unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    let result = ConfigFile::load(cli.config.as_deref())
        .and_then(|file| commands::run(cli.command, &file, cli.config.as_deref()));
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code.clamp(1, 255) as u8)
        }
    }
}
