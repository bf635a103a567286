//! Command-line front end: declarative JSON configuration, run
//! orchestration and result emission for all solvers and benchmarks.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 I/O failure.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunOverrides;

#[derive(Parser)]
#[command(
    name = "spectraldiff",
    version,
    about = "Ensemble-averaged evolution under Markov-switching generators"
)]
struct Cli {
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a run configuration and write CSV outputs plus a manifest.
    Run {
        /// Path to the JSON run configuration.
        config: PathBuf,
        /// Override the solver: dyson_rect, dyson_trapz, dense or mc.
        #[arg(long)]
        solver: Option<String>,
        /// Override the Monte Carlo trajectory count.
        #[arg(long = "n-traj")]
        n_traj: Option<usize>,
        /// Override the Monte Carlo base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the time step.
        #[arg(long)]
        delta: Option<f64>,
        /// Override the number of steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Override the Monte Carlo scheme: rect, trapz or exact.
        #[arg(long)]
        scheme: Option<String>,
        /// Output directory (falls back to the config, then
        /// $SPECTRALDIFF_OUT, then the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean relative error of a solver CSV against Monte Carlo statistics.
    Compare {
        /// Signal CSV produced by a Dyson/dense run.
        test: PathBuf,
        /// Statistics CSV produced by a Monte Carlo run.
        reference: PathBuf,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence/runtime benchmark against a pooled Monte Carlo reference.
    Bench {
        /// Path to the JSON benchmark configuration.
        config: PathBuf,
        /// Override the reference seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a run configuration without executing it.
    Validate {
        /// Path to the JSON run configuration.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            config,
            solver,
            n_traj,
            seed,
            delta,
            steps,
            scheme,
            out,
        } => commands::run_cmd(
            &config,
            RunOverrides {
                solver,
                n_traj,
                seed,
                delta,
                steps,
                scheme,
                out,
            },
            cli.quiet,
        ),
        Cmd::Compare {
            test,
            reference,
            out,
        } => commands::compare_cmd(&test, &reference, out, cli.quiet),
        Cmd::Bench { config, seed, out } => commands::bench_cmd(&config, out, seed, cli.quiet),
        Cmd::Validate { config } => commands::validate_cmd(&config, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
