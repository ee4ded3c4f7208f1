use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ptlab_core::lab::{oracle_table, report_csv};
use ptlab_core::{
    run_nse_convergence, run_poisson_sweep, run_stokes_sweep, write_report, ConvergenceReport,
    ExperimentConfig, LabError, RunOptions,
};

#[derive(Parser)]
#[command(name = "ptlab", version, about = "Vanishing-obstacle experiments on the punctured periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radius sweep for the punctured Poisson problem.
    PoissonSweep(RunArgs),
    /// Radius sweep for the punctured Stokes problem.
    StokesSweep(RunArgs),
    /// Navier–Stokes runs at each radius against the obstacle-free run.
    NseConvergence(RunArgs),
    /// Print the analytic oracle table.
    Oracles,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on conjugate-gradient iterations per linear solve.
    #[arg(long)]
    cg_max_iter: Option<usize>,
}

fn exit_code(e: &LabError) -> ExitCode {
    if e.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn run(args: &RunArgs, runner: fn(&ExperimentConfig, &RunOptions) -> ptlab_core::Result<ConvergenceReport>) -> ExitCode {
    let result = ExperimentConfig::load(&args.config).and_then(|cfg| {
        let opts = RunOptions {
            cg_max_iter: args.cg_max_iter,
        };
        let report = runner(&cfg, &opts)?;
        let out = args.out.clone().unwrap_or_else(|| cfg.out_dir());
        write_report(&report, &out)?;
        Ok((report, out))
    });
    match result {
        Ok((report, out)) => {
            print!("{}", report_csv(&report));
            println!("wrote {}", out.display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: energy ledger failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::PoissonSweep(a) => run(a, run_poisson_sweep),
        Command::StokesSweep(a) => run(a, run_stokes_sweep),
        Command::NseConvergence(a) => run(a, |c, o| run_nse_convergence(c, o).map(|(r, _)| r)),
        Command::Oracles => match oracle_table() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    }
}
