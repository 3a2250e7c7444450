//! Multi-fidelity Gaussian process emulation from the command line:
//! fit emulators from per-level CSV files, predict at new points, run
//! the built-in benchmark experiments and export figure-grid data.
//!
//! Exit codes: 0 success, 2 argument errors, 3 malformed data or I/O
//! errors, 4 numerical failures during fitting or prediction.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod csvio;

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "bayhem",
    version,
    about = "Multi-fidelity Gaussian process emulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an emulator from one CSV per fidelity level, cheapest first
    Fit {
        /// Level data files (x1..xp,y with a header row)
        #[arg(required = true)]
        levels: Vec<PathBuf>,
    },
    /// Predict from a saved model at the points of a CSV
    Predict {
        /// Model file written by `fit`
        model: PathBuf,
        /// Points file (x1..xp with a header row)
        points: PathBuf,
    },
    /// Run a built-in benchmark experiment
    Benchmark {
        /// Experiment name (see `--help` for the list)
        #[arg(
            help = "experiment: example1 | example1-sparse | example2-corr | example2-uncorr | example3"
        )]
        experiment: String,
        /// Comma-separated method subset, e.g. bayhem,ko
        #[arg(long)]
        methods: Option<String>,
    },
    /// Emit grid data (inputs, truths, mean, sd) for surface plots
    Surface {
        /// Saved model file
        #[arg(long, conflicts_with = "experiment")]
        model: Option<PathBuf>,
        /// Built-in experiment to fit and evaluate
        #[arg(long)]
        experiment: Option<String>,
        /// Experiment case label (defaults to the first case)
        #[arg(long)]
        case: Option<String>,
        /// Grid points per axis
        #[arg(long, default_value_t = 50)]
        resolution: usize,
    },
}

/// Distinguish numerical failures (exit 4) from data errors (exit 3).
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(lib) = cause.downcast_ref::<bayhem::Error>() {
            let mut e = lib;
            loop {
                match e {
                    bayhem::Error::Numerical(_) => return 4,
                    bayhem::Error::LevelFit { source, .. } => {
                        e = source;
                    }
                    _ => return 3,
                }
            }
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::resolve(&cli.common) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(3);
        }
    };
    let result = match &cli.command {
        Command::Fit { levels } => commands::cmd_fit(&cfg, levels),
        Command::Predict { model, points } => commands::cmd_predict(&cfg, model, points),
        Command::Benchmark {
            experiment,
            methods,
        } => commands::cmd_benchmark(&cfg, experiment, methods),
        Command::Surface {
            model,
            experiment,
            case,
            resolution,
        } => commands::cmd_surface(&cfg, model, experiment, case, *resolution),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
