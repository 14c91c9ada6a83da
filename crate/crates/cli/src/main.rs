//! `ocs`: verify and construct order reductions of optimal control systems.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ocs", version, about = "Hamiltonian forms and order reduction of optimal control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Candidate block to use; optional when the file has exactly one.
    #[arg(long)]
    pub candidate: Option<String>,
    /// Number of sample points.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Numeric residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Write a JSON report to stdout.
    #[arg(long)]
    pub json: bool,
    /// Trajectory horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// RK4 step.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a system file and echo the normalized system.
    Parse {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run every check on a candidate.
    Verify {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build the factor system of a verified candidate.
    Reduce {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the source file plus the generated candidate block here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate the canonical flow and report drifts and residuals.
    Simulate {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Start point as `p1,..,pn,q1,..,qn`; defaults to all ones.
        #[arg(long)]
        init: Option<String>,
    },
    /// Classify boundary determinacy on sampled fibers q = q0.
    Boundary {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        fibers: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse { path, json } => commands::parse(&path, json),
        Command::Verify { path, common } => commands::verify(&path, &common),
        Command::Reduce { path, common, output } => commands::reduce(&path, &common, output.as_deref()),
        Command::Simulate { path, common, init } => commands::simulate(&path, &common, init.as_deref()),
        Command::Boundary { path, common, fibers } => commands::boundary(&path, &common, fibers),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
