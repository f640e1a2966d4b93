use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tepdyn::cli::{self, CliError};
use tepdyn::sampling::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "tepdyn", version, about = "Dissipative Lagrangian dynamics: simulate, verify, sweep")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured system and write trajectory CSV plus diagnostics JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run verification suites and write a JSON report.
    Verify {
        /// Suite id; repeat for several, `all` or none for every suite.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run one simulation per grid point, concurrently, and write an index.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.record());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Simulate { config, out } => match cli::cmd_simulate(&config, &out) {
            Ok(outcome) => {
                println!("wrote {} and {}", outcome.trajectory.display(), outcome.diagnostics.display());
                ExitCode::from(outcome.exit_code() as u8)
            }
            Err(e) => fail(e),
        },
        Command::Verify { suites, report, seed } => match cli::cmd_verify(&suites, &report, seed) {
            Ok(rep) => {
                for suite in &rep.suites {
                    println!("{:<24} {}", suite.id, if suite.passed { "pass" } else { "FAIL" });
                }
                let code = if rep.passed { cli::EXIT_OK } else { cli::EXIT_VERIFY_FAILED };
                ExitCode::from(code as u8)
            }
            Err(e) => fail(e),
        },
        Command::Sweep { config, out } => match cli::cmd_sweep(&config, &out) {
            Ok(index) => {
                println!("{} points, {} failed", index.points, index.failed);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
