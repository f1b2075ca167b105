use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "aquacast",
    version,
    about = "Daily water demand estimation, forecasting and tuning"
)]
struct Cli {
    /// Seed for every random choice (intervals, search, PDP sampling).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for fold and sample parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Holiday CSV (`date,name`).
    #[arg(long, global = true)]
    holidays: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn billing records into a daily demand series and a gap report.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Gap report path; defaults to `<output stem>_gaps.csv`.
        #[arg(long)]
        gaps: Option<PathBuf>,
        /// Abort on the first bad row instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Fit a model and save it as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        spec: ModelArgs,
    },
    /// Forecast the days after the training window.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        horizon_days: usize,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        interval_width: Option<f64>,
        #[arg(long)]
        n_interval_samples: Option<usize>,
    },
    /// Export trend, yearly, weekly and holiday components.
    Decompose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rolling-origin cross-validation report.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 6)]
        n_quantiles: usize,
        #[arg(long, default_value_t = 4)]
        n_folds: usize,
        #[command(flatten)]
        spec: ModelArgs,
    },
    /// Bayesian hyperparameter search.
    Tune {
        #[arg(long)]
        data: PathBuf,
        /// Search space JSON; defaults to the built-in space of the model type.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        iterations: usize,
        /// Writes `<prefix>_history.csv`, `<prefix>_pdp.csv` and `<prefix>_best.json`.
        #[arg(long)]
        out_prefix: PathBuf,
        #[arg(long, default_value_t = 6)]
        n_quantiles: usize,
        #[arg(long, default_value_t = 4)]
        n_folds: usize,
        /// Record wall time per trial in the history file.
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        spec: ModelArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModelType {
    Additive,
    Lag,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Additive,
    Multiplicative,
}

/// Model selection plus per-field overrides; flags win over `--config`.
#[derive(Args, Debug, Default)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model_type: Option<ModelType>,
    /// Configuration JSON, e.g. a tuner `_best.json`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    changepoint_prior_scale: Option<f64>,
    #[arg(long)]
    seasonality_prior_scale: Option<f64>,
    #[arg(long)]
    holiday_prior_scale: Option<f64>,
    #[arg(long, value_enum)]
    seasonality_mode: Option<Mode>,
    #[arg(long)]
    n_changepoints: Option<usize>,
    #[arg(long)]
    changepoint_range: Option<f64>,
    #[arg(long)]
    yearly_order: Option<usize>,
    #[arg(long)]
    weekly_order: Option<usize>,
    #[arg(long)]
    interval_width: Option<f64>,
    #[arg(long)]
    n_interval_samples: Option<usize>,
    #[arg(long)]
    input_sequence_length: Option<usize>,
    #[arg(long)]
    ridge_epsilon: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
