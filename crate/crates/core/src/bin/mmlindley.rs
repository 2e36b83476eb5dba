//! Command-line front end. Each subcommand prints its text report and exits
//! with 0 (success), 1 (config error), 2 (unstable), 3 (solver failure) or
//! 4 (oracle comparison failure).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmlindley::cli::{self, RunOptions};

#[derive(Parser)]
#[command(name = "mmlindley", version, about = "Markov-modulated multiplicative Lindley recursions")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Simulation seed (overrides `sim.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model I series truncation tolerance (overrides `solver.tol`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for reports and CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Multiply every solved unknown by this factor (negative control).
    #[arg(long, global = true, hide = true)]
    corrupt_unknowns: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check stability, solve, and report diagnostics and outputs.
    Solve { config: PathBuf },
    /// Compare the solution with simulation and write a CSV table.
    Compare { config: PathBuf },
    /// Simulate the recursion and report the estimates.
    Simulate { config: PathBuf },
    /// Mean workload against u for the alternating and independent chains.
    SweepModel1 {
        config: PathBuf,
        /// Comma-separated u values (default 1, 1.5, ..., 5).
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
    },
    /// Mean waiting time against p and u.
    SweepModel2 {
        config: PathBuf,
        /// Comma-separated p values (default 0.1, ..., 0.9).
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Comma-separated u values (default 1, 1.5, ..., 5).
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
    },
}

fn or_default(grid: Vec<f64>, default: fn() -> Vec<f64>) -> Vec<f64> {
    if grid.is_empty() {
        default()
    } else {
        grid
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions {
        out_dir: args.out,
        seed: args.seed,
        tol: args.tol,
        corrupt_unknowns: args.corrupt_unknowns,
    };
    let result = match args.command {
        Command::Solve { config } => cli::cmd_solve(&config, &opts),
        Command::Compare { config } => cli::cmd_compare(&config, &opts),
        Command::Simulate { config } => cli::cmd_simulate(&config, &opts),
        Command::SweepModel1 { config, u } => {
            cli::cmd_sweep_model1(&config, &or_default(u, cli::default_u_grid), &opts).map(|s| s.report)
        }
        Command::SweepModel2 { config, p, u } => cli::cmd_sweep_model2(
            &config,
            &or_default(p, cli::default_p_grid),
            &or_default(u, cli::default_u_grid),
            &opts,
        )
        .map(|s| s.report),
    };
    match result {
        Ok(report) => {
            print!("{}", report.to_text());
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
