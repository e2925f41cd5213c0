//! `tmep`: critical points, exceptional points, DOS and EP design for 1D chains.
//!
//! Exit codes: 0 success, 1 failed verification or I/O error, 2 invalid input,
//! 3 a solver did not converge.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tmep::designer::Location;

#[derive(Parser)]
#[command(version, about = "Transfer-matrix exceptional points and van Hove singularities", long_about = None)]
struct Cli {
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Model file, e.g. {"n": 3, "t": [1.0, 0.925, 0.3]}
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Inline hoppings t_1,...,t_n
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hoppings: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical points, exceptional points and an eigenvalue sweep
    #[command(allow_negative_numbers = true)]
    Analyze(AnalyzeArgs),
    /// Density of states over the band and exponent fits at every critical point
    #[command(allow_negative_numbers = true)]
    Dos(DosArgs),
    /// Solve for hoppings with an EP of the requested order
    #[command(allow_negative_numbers = true)]
    Design(DesignArgs),
    /// Sample the hypersurface of models with a given EP order
    Sweep(SweepArgs),
    /// Seeded invariant checks; exits 1 if any fails
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: ModelSource,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Energy offset for the counted index c(ω0+δ) - c(ω0-δ) [default: 1e-6·bandwidth]
    #[arg(long)]
    pub delta: Option<f64>,

    /// Energies in the eigenvalue sweep over [ω_min - 5% BW, ω_max + 5% BW]
    #[arg(long, default_value_t = 2000)]
    pub sweep_points: usize,

    /// Momenta in the dispersion samples over [-π, π]
    #[arg(long, default_value_t = 2001)]
    pub dispersion_points: usize,
}

#[derive(Args)]
pub struct DosArgs {
    #[command(flatten)]
    pub source: ModelSource,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Momentum grid spacing
    #[arg(long, default_value_t = tmep::dos::DEFAULT_K_STEP)]
    pub k_step: f64,

    /// Finite-difference step for the band curve; sets the sample spacing [default: bandwidth·1.04/(points-1)]
    #[arg(long)]
    pub e_step: Option<f64>,

    /// Samples in the band curve when --e-step is not given
    #[arg(long, default_value_t = 2001)]
    pub points: usize,

    /// Offsets δ from each critical energy used for the exponent fits, as LO,HI
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [tmep::dos::DEFAULT_FIT_WINDOW.0, tmep::dos::DEFAULT_FIT_WINDOW.1])]
    pub fit_window: Vec<f64>,

    /// Log-spaced samples per fit
    #[arg(long, default_value_t = tmep::dos::DEFAULT_FIT_SAMPLES)]
    pub fit_samples: usize,
}

#[derive(Args)]
pub struct DesignArgs {
    /// Hopping range
    #[arg(short, long)]
    pub n: usize,

    /// EP order p
    #[arg(long)]
    pub order: u32,

    /// zone_center, zone_edge or interior
    #[arg(long, default_value_t = Location::ZoneEdge)]
    pub location: Location,

    /// Fix a hopping, e.g. --free t3=0.3 (repeatable)
    #[arg(long, value_parser = commands::parse_free)]
    pub free: Vec<(usize, f64)>,

    /// Also write design.json into this directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Hopping range
    #[arg(short, long)]
    pub n: usize,

    /// EP order p
    #[arg(long)]
    pub order: u32,

    /// zone_center, zone_edge or interior
    #[arg(long, default_value_t = Location::ZoneEdge)]
    pub location: Location,

    /// Halton samples of the free hoppings over [0.05, 0.5]
    #[arg(long, default_value_t = 64)]
    pub count: usize,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Random models for the critical-point checks
    #[arg(long, default_value_t = 200)]
    pub models: usize,

    /// Largest range of those models
    #[arg(long, default_value_t = 4)]
    pub max_range: usize,

    /// Random (model, ω) pairs for the spectral checks
    #[arg(long, default_value_t = 500)]
    pub spectral_cases: usize,

    /// Largest range in the spectral checks
    #[arg(long, default_value_t = 6)]
    pub spectral_max_range: usize,

    /// Samples in the order-5 scan for range 3 (0 skips it)
    #[arg(long, default_value_t = 100_000)]
    pub scan_samples: usize,

    /// Write report.json into this directory instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Negative control: build T(ω) with a corrupted first row
    #[arg(long, hide = true)]
    pub corrupt_transfer: bool,
}

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: error.into() }
    }

    pub fn unconverged(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 3, error: error.into() }
    }

    pub fn failed(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::failed(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Dos(a) => commands::dos(&a),
        Command::Design(a) => commands::design(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
