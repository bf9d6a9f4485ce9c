// Negated comparisons are how inputs reject NaN; index loops mirror the element formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use periwave_core::Error as CoreError;

#[derive(Parser, Debug)]
#[command(
    name = "periwave",
    version,
    about = "Dispersion analysis of periodic elastic waveguides with built-in resonators"
)]
struct Cli {
    /// Worker threads for k-point parallelism (default: all cores)
    #[arg(long, env = "PERIWAVE_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Mesh density multiplier (1 = default mesh)
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Number of k samples on [0, pi/d]
    #[arg(long)]
    pub nk: Option<usize>,
    /// Number of bands per k sample
    #[arg(long)]
    pub bands: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the Brillouin zone: band CSV, gap report, optional SVG
    Dispersion {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Modes of one cell at a single Bloch phase, with shape exports
    Modes {
        config: PathBuf,
        /// Bloch phase k*d in [0, pi]
        #[arg(long, allow_hyphen_values = true)]
        kd: f64,
        #[arg(long)]
        n_modes: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-analyze an existing band CSV for gaps and flat bands
    Gaps {
        csv: PathBuf,
        /// Ceiling for the gap search (normalized)
        #[arg(long, default_value_t = 0.2)]
        f_max: f64,
        /// Narrowest gap reported (normalized)
        #[arg(long, default_value_t = periwave_core::dispersion::GAP_FLOOR)]
        floor: f64,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Horizontal-link stiffness that places f_A at a target frequency
    Tune {
        /// Truss resonator JSON (m1, m2, gamma, gamma1, beta)
        resonator: PathBuf,
        /// Target f_A: Hz, or normalized fd/v with --period and --shear-speed
        #[arg(long)]
        target: f64,
        #[arg(long, requires = "shear_speed")]
        period: Option<f64>,
        #[arg(long, requires = "period")]
        shear_speed: Option<f64>,
        /// Write the result here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Modes of a finite stack of cells on a clamped base
    Finite {
        config: PathBuf,
        #[arg(long)]
        n_cells: usize,
        #[arg(long)]
        n_modes: usize,
        /// Lowest normalized frequency of interest
        #[arg(long)]
        shift: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Closed-form reference models
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Subcommand, Debug)]
enum Oracle {
    /// Euler-Bernoulli beam on periodic simple supports, from a deck config
    Beam {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Exit status for an error: 2 bad input, 3 infeasible request, 4 numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::InfeasibleTarget { .. } => 3,
                CoreError::NonConvergence { .. }
                | CoreError::Integrity(_)
                | CoreError::Bisection { .. }
                | CoreError::Assembly { .. } => 4,
                CoreError::SweepPoint { .. } => continue,
                _ => 2,
            };
        }
        if cause.downcast_ref::<commands::NumericalFailure>().is_some() {
            return 4;
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Dispersion { config, overrides } => commands::dispersion(&config, &overrides),
        Command::Modes { config, kd, n_modes, overrides } => commands::modes(&config, kd, n_modes, &overrides),
        Command::Gaps { csv, f_max, floor, out } => commands::gaps(&csv, f_max, floor, out.as_deref()),
        Command::Tune { resonator, target, period, shear_speed, out } => {
            commands::tune(&resonator, target, period.zip(shear_speed), out.as_deref())
        }
        Command::Finite { config, n_cells, n_modes, shift, overrides } => {
            commands::finite(&config, n_cells, n_modes, shift, &overrides)
        }
        Command::Oracle { which: Oracle::Beam { config, overrides } } => commands::beam(&config, &overrides),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
