mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nnls_core::{Error, Result};

use crate::config::{ExperimentConfig, Overrides};

/// Scattering data, long-time asymptotics and direct simulation for the
/// defocusing nonlocal NLS equation with step-like initial data.
#[derive(Parser, Debug)]
#[command(name = "nnls", version)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Step amplitude A (overrides the config).
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Step shift R (overrides the config).
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Direction grid a:b:n.
    #[arg(long, global = true, allow_hyphen_values = true)]
    xi_grid: Option<String>,
    /// Comma-separated times.
    #[arg(long, global = true, allow_hyphen_values = true)]
    t_list: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral functions a1, a2, b, r1, r2 on the k grid.
    Scatter,
    /// Zeros of a1, winding thresholds and the assumption report.
    Zeros,
    /// Sector classification and asymptotic predictions.
    Predict {
        /// Also tabulate the kink profiles.
        #[arg(long)]
        kink: bool,
    },
    /// Direct finite-difference simulation.
    Simulate,
    /// Simulation compared against predictions.
    Compare,
    /// zeros, predict and (with a simulation section) compare.
    Report {
        #[arg(long)]
        kink: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    let cfg = ExperimentConfig::load(
        cli.config.as_deref(),
        Overrides { a: cli.a, r: cli.r, xi_grid: cli.xi_grid, t_list: cli.t_list, out: cli.out },
    )?;
    match cli.command {
        Command::Scatter => commands::scatter(&cfg),
        Command::Zeros => commands::zeros(&cfg),
        Command::Predict { kink } => commands::predict(&cfg, kink),
        Command::Simulate => commands::simulate(&cfg),
        Command::Compare => commands::compare_cmd(&cfg),
        Command::Report { kink } => commands::report(&cfg, kink),
    }?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.class());
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
