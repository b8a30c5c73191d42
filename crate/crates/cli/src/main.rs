use std::path::PathBuf;

use clap::{Parser, Subcommand};
use eclqr_cli::{cmd_simulate, cmd_solve, cmd_verify, exit};

/// Equality-constrained LQR by factor-graph variable elimination.
#[derive(Parser)]
#[command(name = "eclqr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem; write trajectory, gains and optionally value functions.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        gains: PathBuf,
        #[arg(long)]
        values: Option<PathBuf>,
    },
    /// Solve, then roll the policies out from another initial state.
    Simulate {
        problem: PathBuf,
        /// Comma-separated initial state, e.g. "0,1.8".
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        traj: PathBuf,
    },
    /// Compare the solution with the KKT and (if applicable) Riccati oracles.
    Verify { problem: PathBuf },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                exit::INPUT
            } else {
                exit::OK
            };
            std::process::exit(code);
        }
    };
    let mut stdout = std::io::stdout();
    let result = match &cli.command {
        Command::Solve {
            problem,
            traj,
            gains,
            values,
        } => cmd_solve(problem, traj, gains, values.as_deref(), &mut stdout),
        Command::Simulate { problem, x0, traj } => cmd_simulate(problem, x0, traj, &mut stdout),
        Command::Verify { problem } => cmd_verify(problem, &mut stdout),
    };
    if let Err(f) = result {
        eprintln!("eclqr: {}", f.message);
        std::process::exit(f.code);
    }
}
