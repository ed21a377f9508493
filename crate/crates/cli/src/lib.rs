//! Subcommand drivers for the `dustfall` binary.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use dustfall::Result;

pub use commands::Context;

#[derive(Debug, Parser)]
#[command(name = "dustfall", version, about = "Particulate dispersion, deposition and source inversion")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    pub config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Regularize the raw wind record and tabulate wind roses.
    WindPrep,
    /// Forward run with the configured emission rates.
    Forward,
    /// Unit-rate solves giving deposition per unit emission for each source.
    ForwardMap,
    /// Posterior emission rates from receptor data.
    Invert,
    /// Posterior mean and standard deviation of the deposition field.
    Propagate,
    /// Global sensitivity of the deposition functionals to site parameters.
    Sobol,
    /// Grid-refinement study on the analytic test problem.
    Convergence,
    /// Gaussian-plume baseline against the finite-volume solution.
    PlumeCompare,
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(dustfall::Error::InvalidParameter("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context::load(&cli.config, cli.seed, cli.out.clone())?;
    match cli.command {
        Command::WindPrep => commands::wind_prep(&ctx),
        Command::Forward => commands::forward(&ctx),
        Command::ForwardMap => commands::forward_map(&ctx).map(|_| ()),
        Command::Invert => commands::invert(&ctx),
        Command::Propagate => commands::propagate(&ctx),
        Command::Sobol => commands::sobol(&ctx),
        Command::Convergence => commands::convergence(&ctx),
        Command::PlumeCompare => commands::plume_compare(&ctx),
    }
}
