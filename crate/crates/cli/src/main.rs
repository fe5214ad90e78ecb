//! `nessim` — boundary-driven anharmonic lattice simulations from a single
//! JSON experiment document.
//!
//! Exit codes: 0 success, 1 analysis tolerance failure, 2 config error,
//! 3 runtime fault.

mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "nessim", version, about = "Nonequilibrium steady states of anharmonic lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON experiment config.
    config: PathBuf,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Trajectory worker count (defaults to the number of cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write unrounded raw-value sidecars next to JSON reports.
    #[arg(long)]
    raw: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Structural checks: growth and non-degeneracy assumptions, and the
    /// linear uniqueness classification for quadratic potentials.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Fail (exit 1) on warnings such as rank deficiency.
        #[arg(long)]
        strict: bool,
    },
    /// Integrate one (or several) seeded trajectories to CSV + JSON header.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the run horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Comma-separated observable columns (overrides the config).
        #[arg(long, value_delimiter = ',')]
        observers: Option<Vec<String>>,
    },
    /// Steady-state means with batch-means errors.
    Steady {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Entropy-production large deviations: cumulant curve, symmetry
    /// check, and rate function.
    Ldp {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Green–Kubo response vs flux-autocorrelation integral.
    Greenkubo {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exponential-weight contraction probe over energy shells.
    Lyapunov {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Zero-temperature dissipation scaling in the shell energy.
    Scaling {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact linear-model report: stationary covariance, fluxes,
    /// controllability.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Memory-kernel equation vs its Markovian reduction: moment table.
    GleCompare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-run a simulate output directory and byte-compare the CSV.
    Verify {
        /// Directory holding trajectory.json + trajectory.csv.
        dir: PathBuf,
    },
}

/// The spec'd exit discipline.
pub enum Outcome {
    Success,
    AnalysisFail(String),
    ConfigError(String),
    RuntimeFault(String),
}

impl Outcome {
    fn exit(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::AnalysisFail(msg) => {
                eprintln!("FAIL: {msg}");
                ExitCode::from(1)
            }
            Outcome::ConfigError(msg) => {
                eprintln!("config error: {msg}");
                ExitCode::from(2)
            }
            Outcome::RuntimeFault(msg) => {
                eprintln!("runtime fault: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

fn load(common: &CommonArgs) -> Result<(ExperimentConfig, commands::Context), Outcome> {
    let mut config = ExperimentConfig::from_path(&common.config)
        .map_err(|e| Outcome::ConfigError(format!("{e:#}")))?;
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    if let Some(out) = &common.output {
        config.output.dir = Some(out.display().to_string());
    }
    if common.raw {
        config.output.raw = true;
    }
    if let Some(workers) = common.workers {
        // worker count only affects scheduling; outputs are identical
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let ctx = commands::Context::from_config(&config).map_err(Outcome::ConfigError)?;
    Ok((config, ctx))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check { common, strict } => match load(&common) {
            Ok((config, ctx)) => commands::check(&config, &ctx, strict),
            Err(o) => o,
        },
        Command::Simulate { common, horizon, observers } => match load(&common) {
            Ok((mut config, ctx)) => {
                if let Some(h) = horizon {
                    config.run.horizon = h;
                }
                if let Some(obs) = observers {
                    config.run.observers = obs;
                }
                commands::simulate(&config, &ctx)
            }
            Err(o) => o,
        },
        Command::Steady { common } => dispatch(&common, commands::steady),
        Command::Ldp { common } => dispatch(&common, commands::ldp),
        Command::Greenkubo { common } => dispatch(&common, commands::greenkubo),
        Command::Lyapunov { common } => dispatch(&common, commands::lyapunov),
        Command::Scaling { common } => dispatch(&common, commands::scaling),
        Command::Oracle { common } => dispatch(&common, commands::oracle),
        Command::GleCompare { common } => dispatch(&common, commands::gle_compare),
        Command::Verify { dir } => commands::verify(&dir),
    };
    outcome.exit()
}

fn dispatch(
    common: &CommonArgs,
    f: fn(&ExperimentConfig, &commands::Context) -> Outcome,
) -> Outcome {
    match load(common) {
        Ok((config, ctx)) => f(&config, &ctx),
        Err(o) => o,
    }
}
