//! `rkcl` command-line driver.
//!
//! Exit codes: 0 success, 2 usage, 3 bad data (unknown names, malformed
//! files), 4 a run diverged. `RKCL_THREADS` caps the worker pool.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::Settings;
use output::{Manifest, Output};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("diverged: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Diverged(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rkcl", version, about = "Boundary-closure order-reduction laboratory")]
struct Cli {
    /// Directory for CSV/JSON reports and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
pub struct PairTableau {
    /// Built-in pair name (e.g. `ssprk3/acc_only`, `standard`) or stencil file.
    #[arg(long)]
    pair: Option<String>,
    /// Built-in tableau name or tableau file.
    #[arg(long)]
    tableau: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boundary scalars P, Q, R, S and solvability of a tableau.
    Scalars {
        #[arg(long)]
        tableau: Option<String>,
    },
    /// SSP-RK3 cancellation residuals of a closure pair.
    Residuals {
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Convergence study over a time-step ladder.
    Converge {
        #[command(flatten)]
        pt: PairTableau,
        /// adv1d, burgers, adv2d or euler.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        cfl: Option<f64>,
        /// Boundary trace shape for adv1d (sin_pi, cubic, two_mode, exp_mod).
        #[arg(long)]
        trace: Option<String>,
        /// Comma-separated time steps, strictly decreasing.
        #[arg(long)]
        dts: Option<String>,
        /// Three-level ladder.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        t_end: Option<f64>,
        /// Write the L2 error every N steps to trace.csv.
        #[arg(long, value_name = "N")]
        dump_trace: Option<usize>,
    },
    /// Measured order against CFL number.
    SweepCfl {
        #[command(flatten)]
        pt: PairTableau,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        cfls: Option<String>,
        #[arg(long)]
        dts: Option<String>,
    },
    /// Operator spectrum and amplification factors.
    Spectrum {
        #[command(flatten)]
        pt: PairTableau,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        speed: Option<f64>,
        /// Periodic interior stencil only (debug).
        #[arg(long)]
        periodic: bool,
    },
    /// Largest stable CFL number by bisection.
    CriticalCfl {
        #[command(flatten)]
        pt: PairTableau,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Gershgorin discs of the scaled operator.
    Gershgorin {
        #[command(flatten)]
        pt: PairTableau,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Modified wavenumber of the closure and interior rows.
    Dispersion {
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Dominant scaled eigenvalue against CFL number.
    Trajectory {
        #[command(flatten)]
        pt: PairTableau,
        #[arg(long)]
        cfls: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Differential-evolution closure search.
    Optimize {
        #[arg(long)]
        tableau: Option<String>,
        /// acc or acc-stab.
        #[arg(long)]
        objective: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Three-level objective ladder.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        penalty_nodes: Option<usize>,
    },
    /// Regenerate the data behind a published table.
    Reproduce {
        /// 1, 2, 3, 4, 5, rk4-conv or euler.
        #[arg(long)]
        table: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scalars { .. } => "scalars",
            Command::Residuals { .. } => "residuals",
            Command::Converge { .. } => "converge",
            Command::SweepCfl { .. } => "sweep-cfl",
            Command::Spectrum { .. } => "spectrum",
            Command::CriticalCfl { .. } => "critical-cfl",
            Command::Gershgorin { .. } => "gershgorin",
            Command::Dispersion { .. } => "dispersion",
            Command::Trajectory { .. } => "trajectory",
            Command::Optimize { .. } => "optimize",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

/// What a command reports back besides its files.
#[derive(Debug, Default)]
pub struct RunInfo {
    pub seeds: Vec<u64>,
    /// Set when a run diverged but its report was still written.
    pub diverged: Option<String>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RKCL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RKCL_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_threads()?;
    let start = Instant::now();
    let settings = Settings::load(cli.config.as_deref())?;
    let mut out = Output::new(cli.out.as_deref())?;
    let name = cli.cmd.name();
    let info = commands::dispatch(cli.cmd, &settings, &mut out)?;
    let code = if info.diverged.is_some() { 4 } else { 0 };
    let mut manifest = Manifest::new(name, settings.resolved(), info.seeds);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.exit_code = code as i32;
    if let Some(json) = out.finish(manifest)? {
        println!("{json}");
    }
    if let Some(msg) = info.diverged {
        eprintln!("rkcl: diverged: {msg}");
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rkcl: {e}");
            ExitCode::from(e.code())
        }
    }
}
