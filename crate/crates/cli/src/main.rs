//! Command-line front end for the GP disturbance-feedforward pipeline:
//! simulate measurement campaigns, train and validate kernel models,
//! compress them with Subset-of-Regressors, and run the with/without
//! feedforward tracking comparison.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "maglev-gp",
    version,
    about = "GP disturbance feedforward for a simulated maglev planar stage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Run seed; overrides `[run] seed` from the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate grid measurement campaigns and write one CSV per run.
    Campaign {
        /// Scenario / campaign configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Fit kernel hyperparameters on measurement CSVs and save the model.
    Train {
        /// Training dataset CSVs (campaign run files).
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        /// Kernel variant.
        #[arg(long, value_parser = ["full", "linear-rbf", "rbf"], default_value = "full")]
        kernel: String,
        #[arg(long)]
        seed: u64,
        /// Model output path (a sibling `.report.json` records the fit).
        #[arg(long)]
        out: PathBuf,
        /// Subsample the shuffled training pool to this many points.
        #[arg(long)]
        subsample: Option<usize>,
        /// Spatial-period starting guess for the periodic factor (m).
        #[arg(long)]
        p_sin_hint: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Score one or more models on a fresh dataset (best-fit ratio).
    Validate {
        /// Model files; several render as one comparison table.
        #[arg(long, required = true, num_args = 1..)]
        model: Vec<PathBuf>,
        /// Held-out dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Optional report CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compress a trained model with the Subset-of-Regressors heuristic.
    Compress {
        /// Trained (exact) model file providing kernel + hyperparameters.
        #[arg(long)]
        model: PathBuf,
        /// Training dataset CSVs.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        /// Subset size m.
        #[arg(long, default_value_t = 200)]
        subset_size: usize,
        /// Number of random-subset trials.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// SR model output path.
        #[arg(long)]
        out: PathBuf,
        /// Dataset used to score subset candidates; defaults to a held-out
        /// slice of the training pool.
        #[arg(long)]
        selection_data: Option<PathBuf>,
        /// Fraction of the pool held out for selection scoring when no
        /// --selection-data is given.
        #[arg(long, default_value_t = 0.15)]
        selection_fraction: f64,
    },
    /// Run the tracking trajectory, optionally with the model as
    /// feedforward augmentation, and report error norms.
    Track {
        #[arg(long)]
        config: PathBuf,
        /// Trained model; omit for a baseline-only run.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Render stored results: a tracking comparison CSV or a model file.
    Report {
        /// Comparison CSV produced by `track`.
        #[arg(long)]
        comparison: Option<PathBuf>,
        /// Model file to summarize.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Campaign { config, out, seed } => commands::campaign(&config, &out, seed.seed),
        Command::Train {
            data,
            kernel,
            seed,
            out,
            subsample,
            p_sin_hint,
            max_iter,
            restarts,
            tol,
        } => commands::train(
            &data,
            &kernel,
            seed,
            &out,
            subsample,
            p_sin_hint,
            max_iter,
            restarts,
            tol,
        ),
        Command::Validate { model, data, out } => commands::validate(&model, &data, out.as_deref()),
        Command::Compress {
            model,
            data,
            subset_size,
            trials,
            seed,
            out,
            selection_data,
            selection_fraction,
        } => commands::compress(
            &model,
            &data,
            subset_size,
            trials,
            seed,
            &out,
            selection_data.as_deref(),
            selection_fraction,
        ),
        Command::Track {
            config,
            model,
            out,
            seed,
        } => commands::track(&config, model.as_deref(), &out, seed.seed),
        Command::Report { comparison, model } => {
            commands::report(comparison.as_deref(), model.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
