//! `rdsec` command-line front end.
//!
//! Every run is a pure function of its flags, config file and seed, so
//! reruns produce byte-identical files. Failures exit with status 1 and one
//! line `error: <kind>: <message>` on stderr.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::Map;

use args::{merge, merge_globals, read_config, Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.global.config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    let globals = merge_globals(&cli.global, &mut config)?;
    let seed = globals.seed;
    let outcome = match &cli.command {
        Command::BsbccCurve(a) => commands::bsbcc_curve(merge(a, config)?)?,
        Command::MmfCurve(a) => commands::mmf_curve(merge(a, config)?, seed)?,
        Command::MmfCapacity(a) => commands::mmf_capacity(merge(a, config)?, seed)?,
        Command::Outage(a) => commands::outage(merge(a, config)?, seed)?,
        Command::BinningSim(a) => commands::binning(merge(a, config)?, seed)?,
        Command::LemmaCheck(a) => commands::lemma_check(merge(a, config)?, seed)?,
        Command::HaarTest(a) => commands::haar_test(merge(a, config)?, seed)?,
    };
    let text = outcome.report.render(globals.format);
    match &cli.global.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::new("io", format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    outcome.violation.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            // A closed pipe is not an error when printing help.
            let _ = write!(std::io::stdout(), "{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", CliError::new("usage", first));
            return ExitCode::FAILURE;
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e} (command {name})");
            ExitCode::FAILURE
        }
    }
}
