//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "cosci",
    version,
    about = "Feature screening for large-scale clustering via fusion-path merge scores"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every feature column of a CSV matrix.
    Score(ScoreArgs),
    /// Score and select features with a fixed, simulated, or data-driven threshold.
    Select(SelectArgs),
    /// Calibrate a screening threshold against simulated noise of a given family.
    Calibrate(CalibrateArgs),
    /// Pairwise projection screen for jointly informative feature pairs.
    Pairs(PairsArgs),
    /// Generate a benchmark design matrix with ground truth.
    Simulate(SimulateArgs),
    /// Replicate a benchmark design and report average FN / FP (and CER) rates.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV: rows are observations unless --transpose.
    #[arg(long)]
    pub input: PathBuf,
    /// First row is a header with feature names.
    #[arg(long)]
    pub header: bool,
    /// Treat CSV rows as features and columns as observations.
    #[arg(long)]
    pub transpose: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Worker threads; COSCI_THREADS or the logical CPU count when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    /// RNG seed for anything stochastic.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl RunArgs {
    /// Flag wins over COSCI_THREADS, which wins over the CPU count.
    pub fn resolve_threads(&self) -> Result<usize> {
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(CliError::input("--threads must be positive"));
            }
            return Ok(t);
        }
        if let Ok(value) = std::env::var("COSCI_THREADS") {
            let t: usize = value
                .parse()
                .map_err(|_| CliError::input(format!("COSCI_THREADS='{value}' is not a number")))?;
            if t == 0 {
                return Err(CliError::input("COSCI_THREADS must be positive"));
            }
            return Ok(t);
        }
        Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Base path for the report: writes <output>.csv and <output>.json.
    #[arg(long)]
    pub output: PathBuf,
    /// Also compute the quantile-restricted score at this tau in [0, 0.5).
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: PathBuf,
    /// Threshold mode.
    #[arg(long, value_parser = ["fixed", "simulated", "data-driven"])]
    pub mode: String,
    /// Threshold for --mode fixed, in (0, 0.5].
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Truncation quantile for the empirical null (data-driven mode).
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    /// Histogram bins for the mixture density (data-driven mode).
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Polynomial degree for the mixture density (data-driven mode).
    #[arg(long, default_value_t = 5)]
    pub degree: usize,
    /// Noise family for --mode simulated.
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    /// Calibration grid for --mode simulated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub grid: Option<Vec<f64>>,
    /// Simulated replicates for --mode simulated.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Detection tolerance for --mode simulated.
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    /// Also compute the quantile-restricted score at this tau.
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Sample size the threshold is calibrated for.
    #[arg(long)]
    pub n: usize,
    /// Noise family id (gaussian, t1, t5, cauchy, exponential, laplace,
    /// lognormal, beta13, gev, triangular).
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    /// Optional path for the detection table CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: PathBuf,
    /// Screening threshold in (0, 0.5].
    #[arg(long)]
    pub alpha0: f64,
    /// Number of projection lines spanning a half-circle.
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Design id: I, II, III, IV, V, corr_V, or calib(<family>).
    #[arg(long)]
    pub design: String,
    #[arg(long)]
    pub n: usize,
    /// Output CSV path; a JSON side-car with the ground truth sits next to it.
    #[arg(long)]
    pub output: PathBuf,
    /// Write a header row with feature names.
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Design id: I, II, III, IV, V, corr_V, or calib(<family>).
    #[arg(long)]
    pub design: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub reps: u64,
    /// fixed or data-driven.
    #[arg(long, value_parser = ["fixed", "data-driven"], default_value = "fixed")]
    pub mode: String,
    /// Single threshold for --mode fixed; the default grid is swept when absent.
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Truncation quantile for data-driven mode.
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    /// Overrides the pairwise-design projection line count.
    #[arg(long)]
    pub m: Option<usize>,
    /// Also cluster the selected features and report per-signal CER.
    #[arg(long)]
    pub cer: bool,
    /// Optional path for the metrics table CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}
