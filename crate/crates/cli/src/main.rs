//! `fermicone`: property suites, variational energies and reference values
//! for spinless fermions on small grids.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Quantity;
use crate::config::{RunConfig, Settings};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "fermicone", version, about)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "FERMICONE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized property suites.
    Verify {
        /// Only this suite.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimize the layered ansatz and report the energy trace.
    Energy(RunArgs),
    /// Exact, free-fermion or Anderson reference values.
    Oracle {
        #[arg(value_enum)]
        quantity: Quantity,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Time repeated energy evaluations.
    Bench(RunArgs),
}

/// Run parameters; each one overrides the same key of `--config`.
#[derive(Args)]
struct RunArgs {
    /// JSON file with any of the keys below (snake_case).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid size `WxH`.
    #[arg(long)]
    lattice: Option<String>,
    /// Hopping amplitude.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Nearest-neighbour interaction.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    /// Coarse-graining block `WxH`.
    #[arg(long)]
    block: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Generator degree of every gate (even).
    #[arg(long)]
    degree: Option<usize>,
    /// Spread of the initial generator coefficients.
    #[arg(long)]
    init_std: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Initial line-search step.
    #[arg(long)]
    step: Option<f64>,
    /// Gradient-norm stopping threshold.
    #[arg(long)]
    tol: Option<f64>,
    /// even, odd or both.
    #[arg(long)]
    parity: Option<String>,
    /// adjoint or fd.
    #[arg(long)]
    gradient: Option<String>,
    /// Largest number of modes a contraction step may hold.
    #[arg(long)]
    width_cap: Option<usize>,
    /// Repetitions for bench.
    #[arg(long)]
    reps: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// jsonl or csv.
    #[arg(long)]
    format: Option<String>,
    /// Include wall-clock times, which makes output non-reproducible.
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn settings(self) -> Result<Settings, CliError> {
        let flags = RunConfig {
            lattice: self.lattice,
            t: self.t,
            u: self.u,
            block: self.block,
            seed: self.seed,
            degree: self.degree,
            init_std: self.init_std,
            max_iters: self.max_iters,
            step: self.step,
            tol: self.tol,
            parity: self.parity,
            gradient: self.gradient,
            width_cap: self.width_cap,
            reps: self.reps,
            out: self.out,
            format: self.format,
            timing: self.timing.then_some(true),
        };
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Settings::from_config(&base.merged(flags))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Verify { suite, seed } => commands::verify(suite.as_deref(), seed),
        Command::Energy(args) => commands::energy(&args.settings()?),
        Command::Oracle { quantity, run } => commands::oracle(quantity, &run.settings()?),
        Command::Bench(args) => commands::bench(&args.settings()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Verify) {
                eprintln!("fermicone: {e}");
            }
            e.exit_code()
        }
    }
}
