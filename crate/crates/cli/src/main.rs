//! Command-line frontend: dataset generation, model fitting and
//! prediction, PCA scoring through the filterbank route, PCA-regression
//! baselines, and the four experiment harnesses. Every run reads a JSON
//! config, writes its outputs under `--out`, and leaves a manifest with
//! content hashes sufficient to reproduce it.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::CovScale;

#[derive(Parser)]
#[command(
    name = "covnet",
    version,
    about = "Covariance-spectral learning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file for this subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if absent); also receives manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed found in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target location: `last` for the final CSV column, or a path to a
    /// separate single-column file. Overrides the config.
    #[arg(long)]
    target_col: Option<String>,
}

#[derive(Args)]
struct CovArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Covariance normalization before the forward pass.
    #[arg(long)]
    cov_scale: Option<CovScale>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (Friedman #1, low-rank regression,
    /// Gaussian ensemble, or multi-resolution).
    Datagen(CommonArgs),
    /// Train a covariance neural network and write the model blob.
    Fit(CovArgs),
    /// Predict with a trained model blob; the covariance comes from the
    /// input data unless `cov_data` redirects it.
    Predict(CovArgs),
    /// PCA scores computed through the narrowband filterbank route.
    Pca {
        #[command(flatten)]
        data: DataArgs,
        /// Cross-check filterbank scores against the direct
        /// eigendecomposition projection and print the max discrepancy.
        #[arg(long)]
        oracle: bool,
    },
    /// PCA regression baseline (linear or RBF kernel ridge).
    Baseline(DataArgs),
    /// Stability of a nominal model under covariance perturbation.
    Stability(DataArgs),
    /// Filter perturbation norm versus sample size, with log-log slope.
    Scaling(CommonArgs),
    /// Direct evaluation of the network perturbation bound.
    Lipschitz(CommonArgs),
    /// Transferability of one model across data resolutions.
    Transfer(CommonArgs),
}

fn main() -> ExitCode {
    if let Ok(value) = std::env::var("COVNET_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        } else {
            eprintln!("warning: ignoring unparsable COVNET_THREADS={value}");
        }
    }

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Datagen(args) => commands::datagen(&args.config, &args.out, args.seed),
        Command::Fit(args) => commands::fit(
            &args.data.common.config,
            &args.data.common.out,
            args.data.common.seed,
            args.data.target_col.as_deref(),
            args.cov_scale,
        ),
        Command::Predict(args) => commands::predict(
            &args.data.common.config,
            &args.data.common.out,
            args.data.common.seed,
            args.data.target_col.as_deref(),
            args.cov_scale,
        ),
        Command::Pca { data, oracle } => commands::pca(
            &data.common.config,
            &data.common.out,
            data.common.seed,
            data.target_col.as_deref(),
            *oracle,
        ),
        Command::Baseline(args) => commands::baseline(
            &args.common.config,
            &args.common.out,
            args.common.seed,
            args.target_col.as_deref(),
        ),
        Command::Stability(args) => commands::stability(
            &args.common.config,
            &args.common.out,
            args.common.seed,
            args.target_col.as_deref(),
        ),
        Command::Scaling(args) => commands::scaling(&args.config, &args.out, args.seed),
        Command::Lipschitz(args) => commands::lipschitz(&args.config, &args.out, args.seed),
        Command::Transfer(args) => commands::transfer(&args.config, &args.out, args.seed),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
