use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "perifix",
    version,
    about = "Periodic solutions of monotone cyclic feedback systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Iterate the Poincaré map and write the iterates with their step residuals.
    Orbit(OrbitArgs),
    /// Run the hypothesis checks and the bracketing iteration.
    Certify(CertifyArgs),
    /// Regenerate the gene-regulation example: trajectories, figures and certificate.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative tolerance of the integrator.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the integrator.
    #[arg(long)]
    pub atol: Option<f64>,
    /// Seed of the quasi-random check samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub x0: Vec<f64>,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a JSON run report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub iterations: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Lower bracket corner; defaults to the low corner of the state box.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Upper bracket corner; defaults to the high corner of the state box.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[command(flatten)]
    pub certify: CertifyOptions,
    /// Exit with status 3 when any check fails.
    #[arg(long)]
    pub strict: bool,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyOptions {
    /// Sample points per Jacobian check.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    /// Gap at which the two bracketing chains count as met.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Bound on the fixed-point residual of the limit.
    #[arg(long, default_value_t = 1e-8)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            samples: 256,
            tol: 1e-6,
            residual_tol: 1e-8,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub outdir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}
