use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dyadica_cli::{describe, requested_threads, run_and_write, write_power_weight, ExperimentConfig, Result};

/// Verification harness for dyadic Haar multipliers and weighted norms.
#[derive(Parser)]
#[command(name = "dyadica", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a TOML config and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Explain one row of a report.
    Describe {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        id: usize,
    },
    /// Write the power weight x^α in the plain-text weight format.
    Weight {
        #[arg(long, allow_hyphen_values = true)]
        power: f64,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

const FAILED_CHECK: u8 = 2;
const USAGE: u8 = 1;

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config } => {
            if let Some(n) = requested_threads()? {
                // Only fails if a pool already exists, which cannot happen here.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let config = ExperimentConfig::load(&config)?;
            let report = run_and_write(&config)?;
            let failures = report.all_failures();
            eprintln!(
                "{}: {} rows written to {}, {} failed checks",
                config.suite,
                report.rows.len(),
                config.output.display(),
                failures.len()
            );
            for f in &failures {
                eprintln!("  {f}");
            }
            Ok(if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILED_CHECK)
            })
        }
        Command::Describe { report, id } => {
            print!("{}", describe(&report, id)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Weight { power, depth, out } => {
            write_power_weight(power, depth, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}
