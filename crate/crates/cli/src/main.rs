//! `critfield` — batch front end for the covariance, spectral, Monte Carlo
//! and field-simulation machinery.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a numerical contract
//! fails (for example `sigma --verify` exceeding its tolerance).

// `!(x < tol)` is used deliberately so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Qualification report of the model.
    Check,
    /// Conditional covariance Σ(t), its limit Σ₀ and curvature Σ₂.
    Sigma,
    /// Closed-form spectrum of Σ₀ and the fitted eigenpath expansion.
    Spectrum,
    /// Coefficients of the limit polynomial h₀ and its antisymmetry residual.
    Hpoly,
    /// Sign ratio f₊/f₋ over the r × u sweep.
    Ratio,
    /// Ψ_u(r) over the r × u sweep.
    Psi,
    /// Share of maxima over the r × u sweep.
    Share,
    /// Simulate fields and tabulate critical points and close pairs.
    Simulate,
    /// Merge the rows of saved artifacts into one table.
    Report,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    /// Thresholded values from their truncated laws (default).
    #[default]
    Tail,
    /// y ~ N(0, I) through the symmetric square root.
    Direct,
    /// y ~ N(0, I) through the spectral factor.
    Spectral,
    /// Spectral factor with null-coordinate reflection as antithetic partner.
    Reflected,
}

#[derive(Debug, Parser)]
#[command(
    name = "critfield",
    version,
    about = "Closely paired critical points of isotropic Gaussian fields"
)]
pub struct Cli {
    pub command: Command,
    /// JSON config file (or a saved artifact, whose embedded config is reused).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model, e.g. `gaussian:a=1` or `cauchy:ell=1,nu=2`.
    #[arg(long)]
    pub model: Option<String>,
    /// Spatial dimension.
    #[arg(long = "N")]
    pub n_dim: Option<usize>,
    /// Pair distances.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// Thresholds.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Option<Vec<f64>>,
    /// Monte Carlo samples per sweep point.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub shards: Option<usize>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerChoice>,
    /// Grid points per axis for `simulate`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Grid spacing for `simulate`.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Pair distance for `simulate`, in correlation lengths.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Write every simulated field and its critical points (`simulate --out`).
    #[arg(long)]
    pub save_fields: bool,
    /// Compare `sigma` against the independent oracle.
    #[arg(long)]
    pub verify: bool,
    /// Output directory (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Artifacts merged by `report`.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
}

/// Why a run did not succeed.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<critfield::Error> for Failure {
    fn from(e: critfield::Error) -> Self {
        use critfield::Error as E;
        match e {
            E::Domain(_) | E::Io(_) => Failure::Validation(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = RunConfig::resolve(cli)?;
    commands::run(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("critfield: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
