//! `recdiff`: simulate, estimate, run Monte Carlo studies and check designs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 I/O error.

mod commands;
mod config;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::config::{Cli, Keys, RunConfig};

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Data(String),
    Io(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
            AppError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "configuration error: {m}"),
            AppError::Data(m) => write!(f, "data error: {m}"),
            AppError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<recdiff::Error> for AppError {
    fn from(err: recdiff::Error) -> Self {
        use recdiff::Error as E;
        match err {
            E::InvalidConfig(_) | E::InvalidParameter(_) | E::Domain(_) | E::InvalidIndex(_) => {
                AppError::Config(err.to_string())
            }
            E::InsufficientData(_) | E::Data(_) | E::Parse { .. } => {
                AppError::Data(err.to_string())
            }
            E::Io(e) => AppError::Io(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let keys = match &cli.config {
        Some(path) => Keys::from_file(path)?.overlay(&cli.keys),
        None => cli.keys.clone(),
    };
    let config = RunConfig::resolve(&keys)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    commands::dispatch(&config, &mut out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli) {
        Ok(()) => {
            eprintln!("recdiff: done in {:.3}s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("recdiff: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
