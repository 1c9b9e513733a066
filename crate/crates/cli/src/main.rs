//! `dde-floquet` — periodic orbits and Floquet spectra of delay equations.
//!
//! Exit codes: 0 success, 1 numerical failure (unconverged roots, failed
//! checks, flagged results under `--strict`), 2 input or I/O error.

mod adjoint;
mod config;
mod orbit;
mod output;
mod problem;
mod spectrum;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dde_floquet::model::ModelError;
use dde_floquet::orbit::OrbitError;
use thiserror::Error;

use config::{JobConfig, Method, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn orbit(e: OrbitError) -> Self {
        match e {
            OrbitError::NotOscillator(_) | OrbitError::InvalidParameter(_) => Self::Input(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }

    pub fn model(e: ModelError) -> Self {
        match e {
            ModelError::Parse { .. } | ModelError::Invalid(_) | ModelError::NonpositiveFrequency(_) => Self::Input(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Self::Numerical(_) => 1,
            Self::Input(_) | Self::Io(_) => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    NumericalFailure,
}

#[derive(Parser)]
#[command(name = "dde-floquet", version, about = "Periodic orbits and Floquet spectra of delay differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perturbative periodic orbit and its residual.
    Orbit(JobArgs),
    /// Floquet exponents by one or all methods.
    Spectrum(JobArgs),
    /// Adjoint modes, biorthonormalization and the Gram matrix.
    Adjoint(JobArgs),
    /// Invariant and oracle checks; exit 0 iff all pass.
    Verify(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Job configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Search box in strip coordinates.
    #[arg(long = "box", num_args = 4, value_names = ["RE0", "RE1", "IM0", "IM1"], allow_negative_numbers = true)]
    bx: Option<Vec<f64>>,
    /// Expansion order P.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat flagged results as failures.
    #[arg(long)]
    strict: bool,
}

impl JobArgs {
    fn load(&self) -> Result<JobConfig, CliError> {
        let overrides = Overrides {
            method: self.method,
            bx: self.bx.as_ref().map(|b| [b[0], b[1], b[2], b[3]]),
            order: self.order,
            mu: self.mu,
            out: self.out.clone(),
            strict: self.strict,
        };
        JobConfig::load(&self.config, &overrides)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DDE_FLOQUET_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Input(format!("DDE_FLOQUET_THREADS must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(CliError::Input("DDE_FLOQUET_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> Result<Status, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Orbit(a) => orbit::cmd_orbit(&a.load()?),
        Command::Spectrum(a) => spectrum::cmd_spectrum(&a.load()?),
        Command::Adjoint(a) => adjoint::cmd_adjoint(&a.load()?),
        Command::Verify(a) => verify::cmd_verify(&a.load()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NumericalFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
