use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csforecast_cli::commands;
use csforecast_cli::config::{load_config, Overrides};

/// High-dimensional multivariate forecasting runs driven by a config file.
///
/// Set CSFORECAST_LOG (error|warn|info|debug|trace) for log verbosity.
#[derive(Parser)]
#[command(name = "csforecast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config file's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config file's forecaster variant
    /// (csnet1|csnet2|csnet3|var|persistence).
    #[arg(long)]
    variant: Option<String>,
    /// Worker threads for backtest windows (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV plus its manifest.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train a network variant and write a model file.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Forecast the steps after the dataset's trailing window.
    Forecast {
        #[command(flatten)]
        common: Common,
        /// Model file produced by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Walk-forward backtest of the selected variant.
    Backtest {
        #[command(flatten)]
        common: Common,
    },
    /// Rank report JSON files by aggregate MASE.
    Compare {
        /// Report files produced by `backtest`.
        reports: Vec<PathBuf>,
        /// Write the comparison CSV here instead of stdout only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CSFORECAST_LOG", "warn"))
        .init();
}

/// rayon's global pool (linked through the core crate) is built lazily on
/// first use and honors this env var.
fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        std::env::set_var("RAYON_NUM_THREADS", n.max(1).to_string());
    }
}

fn overrides(common: &Common) -> Overrides {
    Overrides {
        seed: common.seed,
        out: common.out.clone(),
        variant: common.variant.clone(),
    }
}

fn run() -> Result<(), csforecast::CsError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { common } => {
            init_threads(common.threads);
            let resolved = load_config(&common.config, &overrides(&common))?;
            let outputs = commands::cmd_synth(&resolved)?;
            println!("{}", outputs.csv.display());
            Ok(())
        }
        Command::Train { common } => {
            init_threads(common.threads);
            let resolved = load_config(&common.config, &overrides(&common))?;
            let path = commands::cmd_train(&resolved)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Forecast { common, model } => {
            init_threads(common.threads);
            let resolved = load_config(&common.config, &overrides(&common))?;
            let path = commands::cmd_forecast(&resolved, &model)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Backtest { common } => {
            init_threads(common.threads);
            let resolved = load_config(&common.config, &overrides(&common))?;
            let path = commands::cmd_backtest(&resolved)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Compare { reports, out } => {
            let csv = commands::cmd_compare(&reports, out.as_deref())?;
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            ExitCode::FAILURE
        }
    }
}
