//! `probpark`: command-line front end for the probpark library.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use config::{Cli, Format, RunConfig, CSV_CONFIG_PREFIX};

#[derive(Debug)]
pub enum CliError {
    /// Bad input or usage: exit 1.
    Usage(String),
    /// A check or identity failed: exit 2.
    Check(String),
}

impl From<probpark::Error> for CliError {
    fn from(e: probpark::Error) -> Self {
        match e {
            probpark::Error::Inconsistent(_) => CliError::Check(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a RunConfig,
    result: &'a serde_json::Value,
}

fn render(cfg: &RunConfig, report: &commands::Report) -> Result<String, CliError> {
    match cfg.format {
        Format::Json => {
            let doc = Document {
                config: cfg,
                result: &report.result,
            };
            let mut text = serde_json::to_string_pretty(&doc)
                .map_err(|e| CliError::Usage(format!("cannot serialize output: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let body = report.csv.as_deref().ok_or_else(|| {
                CliError::Usage(format!("{} has no CSV output", cfg.command.name()))
            })?;
            let line = serde_json::to_string(cfg)
                .map_err(|e| CliError::Usage(format!("cannot serialize config: {e}")))?;
            Ok(format!("{CSV_CONFIG_PREFIX}{line}\n{body}"))
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = RunConfig::from_cli(cli)?;
    if cfg.format == Format::Csv && !commands::supports_csv(&cfg.command) {
        return Err(CliError::Usage(format!(
            "--format csv is not available for {}",
            cfg.command.name()
        )));
    }
    let report = commands::run(&cfg)?;
    let text = render(&cfg, &report)?;
    match &cfg.output {
        Some(path) => commands::write_file(path, text.as_bytes())?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))?;
        }
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("probpark: check failed");
            ExitCode::from(2)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("probpark: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Check(msg)) => {
            eprintln!("probpark: {msg}");
            ExitCode::from(2)
        }
    }
}
