#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use repmut_cli::{run_scenario, Mode, Overrides};

#[derive(Parser)]
#[command(
    name = "repmut",
    version,
    about = "Replicator-mutator solvers driven by JSON scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the scenario's output_dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Picard tolerance for the mean fixed point.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Time steps of the mean table.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Accepted for scripts; nothing in the pipeline is random.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Mean table only.
    Mean { config: PathBuf },
    /// Semi-analytic solution of the u-equation.
    Solve { config: PathBuf },
    /// Closed-form Gaussian solution.
    Gaussian { config: PathBuf },
    /// Semi-analytic solution of the v-equation through the time warp.
    Vsolve { config: PathBuf },
    /// Finite-difference solution.
    Oracle { config: PathBuf },
    /// Semi-analytic vs finite differences, with an L¹ report.
    Compare { config: PathBuf },
    /// Runs whatever solver the scenario names.
    Scenario { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, path) = match cli.command {
        Command::Mean { config } => (Mode::Mean, config),
        Command::Solve { config } => (Mode::Solve, config),
        Command::Gaussian { config } => (Mode::Gaussian, config),
        Command::Vsolve { config } => (Mode::VSolve, config),
        Command::Oracle { config } => (Mode::Oracle, config),
        Command::Compare { config } => (Mode::Compare, config),
        Command::Scenario { path } => (Mode::Scenario, path),
    };
    let overrides = Overrides {
        out: cli.out,
        tol: cli.tol,
        grid: cli.grid,
    };
    match run_scenario(&path, mode, &overrides) {
        Ok(outcome) => {
            println!(
                "wrote {} files to {}",
                outcome.files.len(),
                outcome.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code())
        }
    }
}
