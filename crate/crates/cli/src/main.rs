//! `rirfit` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

/// Default worker count when `--threads` is not given.
const THREADS_ENV: &str = "RIRFIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    /// Enumerate reflection paths to each listener.
    Trace,
    /// Estimate the source position from the training responses.
    Localize,
    /// Fit scene parameters to the training responses.
    Fit,
    /// Render impulse responses at the configured listeners.
    Render,
    /// Render dry audio as heard at the configured listeners.
    RenderMusic,
    /// Render two-ear responses through an HRIR bank.
    Binauralize,
    /// Broadband level map over a horizontal plane.
    Grid,
    /// Low-frequency level map over a horizontal plane.
    Soundfield,
    /// Score a checkpoint and the baselines on the test split.
    Eval,
    /// Copy one surface response between checkpoints.
    Transfer,
}

#[derive(Debug, Parser)]
#[command(name = "rirfit", version, about = "Fit and render room impulse responses")]
pub struct Cli {
    pub verb: Verb,
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration value, e.g. `epochs=10` or `render.maxOrder=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory; overrides `outputDir` from the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Also write PNG rasters for grid outputs.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<rirfit::Error> for CliError {
    fn from(e: rirfit::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `rirfit --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
