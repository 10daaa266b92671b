use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlse_lab::experiment;

/// Numerical laboratory for generalized (non)linear quantum mechanics.
#[derive(Parser)]
#[command(name = "nlse-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        /// Path to a TOML experiment config.
        config: PathBuf,
        /// Output directory for result and series files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a config once per value of a scalar parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path of the scalar field, e.g. `coefficients.mu2`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Concurrent sweep members.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run the bundled acceptance suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => match experiment::run_path(&config, &out) {
            Ok(artifacts) => {
                println!(
                    "{}: {} (results in {})",
                    artifacts.record.stem,
                    artifacts.record.verdict,
                    artifacts.result_path.display()
                );
                ExitCode::from(artifacts.status.exit_code() as u8)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Sweep { config, param, values, out, workers } => {
            match experiment::sweep(&config, &param, &values, &out, workers) {
                Ok(artifacts) => {
                    println!(
                        "sweep over {param}: {} members, summary in {}",
                        artifacts.members.len(),
                        artifacts.summary_path.display()
                    );
                    ExitCode::from(artifacts.status.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Verify => {
            let reports = nlse_lab::acceptance::run_all();
            if reports.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
