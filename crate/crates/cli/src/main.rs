//! Experiment runner for the simulator: Monte Carlo sweeps, single-run
//! traces, and the built-in invariant suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irsim_core::experiment::{monte_carlo, run_trace, ExperimentSpec, Method, RunOptions};
use irsim_core::{Error, SystemConfig};

#[derive(Parser)]
#[command(name = "irsim", version, about = "Wideband multiuser MIMO downlink simulator with a passive reflecting surface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (experiment spec for `run`, scenario for `trace`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep from an experiment spec file and emit
    /// results.csv and summary.csv.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the number of realizations per cell.
        #[arg(long)]
        realizations: Option<usize>,
        /// Byte-stable output: suppress the timestamp header and the
        /// wall-clock column values.
        #[arg(long)]
        deterministic: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a single realization of one method and emit its iteration trace.
    Trace {
        #[command(flatten)]
        common: CommonArgs,
        /// Method to trace.
        #[arg(long, default_value = "proposed_pg")]
        method: String,
    },
    /// Run the built-in invariant suite and print one line per check.
    Validate,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Degenerate(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { common, realizations, deterministic, threads } => {
            let mut spec = ExperimentSpec::from_path(&common.config)?;
            if let Some(seed) = common.seed {
                spec.base.rng_seed = seed;
            }
            if let Some(n) = realizations {
                spec.realizations = n;
            }
            let opts = RunOptions { out_dir: common.out, deterministic, threads };
            let out = monte_carlo(&spec, &opts)?;
            println!(
                "wrote {} rows to {} and {} summary cells to {}",
                out.rows.len(),
                out.results_path.display(),
                out.summary.len(),
                out.summary_path.display()
            );
            Ok(())
        }
        Command::Trace { common, method } => {
            let mut cfg = SystemConfig::from_path(&common.config)?;
            if let Some(seed) = common.seed {
                cfg.rng_seed = seed;
            }
            let method = Method::parse(&method)?;
            let (outcome, path) = run_trace(&cfg, method, &common.out)?;
            println!(
                "{}: sum_rate {:.4} bit/s/Hz, final uplink MSE {:.6}, {} iterations ({}converged); trace at {}",
                method.name(),
                outcome.row.sum_rate,
                outcome.trace.final_mse(),
                outcome.trace.iterations,
                if outcome.trace.converged { "" } else { "not " },
                path.display()
            );
            Ok(())
        }
        Command::Validate => {
            let outcomes = irsim_core::validate::run_all();
            let mut failed = 0;
            for o in &outcomes {
                match &o.result {
                    Ok(()) => println!("PASS {}", o.name),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL {}: {e}", o.name);
                    }
                }
            }
            if failed > 0 {
                return Err(Error::degenerate(format!("{failed} checks failed")));
            }
            println!("all {} checks passed", outcomes.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
