use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use lab::{check_report, list_suites, run_suite, ExperimentConfig, SUITES};

#[derive(Parser)]
#[command(name = "lab", about = "Verification suites for refined Sobolev scales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite named in a config and write its report.
    Run {
        config: PathBuf,
        /// Print every row, not only failures.
        #[arg(long)]
        verbose: bool,
    },
    /// List the registered suites.
    List,
    /// Re-check a report written by `run`.
    Check { report: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            for (line, suite) in list_suites().iter().zip(SUITES.iter()) {
                println!("{line}  ({})", suite.summary);
            }
            Ok(true)
        }
        Command::Run { config, verbose } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_suite(&cfg)?;
            for r in out.rows.iter().filter(|r| verbose || !r.pass) {
                println!("{} {} | {} | {:e} {}", if r.pass { "pass" } else { "FAIL" }, r.params, r.quantity, r.measured, r.expected);
            }
            println!(
                "{}: {}/{} rows pass (config {}, seed {}) -> {}",
                cfg.suite,
                out.summary.passed,
                out.summary.rows,
                out.summary.config_hash,
                out.summary.seed,
                out.csv.display()
            );
            Ok(out.summary.all_pass)
        }
        Command::Check { report } => {
            let outcome = check_report(&report)?;
            for r in &outcome.failed {
                println!("FAIL {} | {} | {:e} {}", r.params, r.quantity, r.measured, r.expected);
            }
            for p in &outcome.problems {
                println!("problem: {p}");
            }
            println!("{}: {} rows, {} failed, {} problems", report.display(), outcome.rows, outcome.failed.len(), outcome.problems.len());
            Ok(outcome.ok())
        }
    }
}
