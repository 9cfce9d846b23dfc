mod cli;
mod commands;
mod error;
mod experiment;
mod output;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;

use crate::cli::{Cli, Command};
use crate::error::{CliError, CliResult};

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::FitMple(a) => commands::fit_mple(a),
        Command::FitMcmle(a) => commands::fit_mcmle(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Experiment(a) => experiment::run(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => {
            let _ = e.print();
            std::process::exit(0);
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first).to_json_line());
            std::process::exit(2);
        }
    };
    if let Err(e) = dispatch(&cli) {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.code);
    }
}
