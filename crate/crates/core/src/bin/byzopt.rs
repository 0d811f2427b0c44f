use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use byzopt::cli::{cmd_plot, cmd_report, cmd_run, CliError, RunOptions};

/// Byzantine fault-tolerant projected consensus simulator.
#[derive(Debug, Parser)]
#[command(name = "byzopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write the CSV trace plus a JSON summary.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Trace CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Summary destination, default `<out>.summary.json`.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Disable the CE filter (plain projected consensus).
        #[arg(long)]
        no_filter: bool,
        #[arg(long)]
        max_rounds: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Process agents within a round on the thread pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Print redundancy, margin and contraction constants for a scenario.
    Report {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Render log10(V^t) against t as SVG; repeat --trace to overlay runs.
    Plot {
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
        #[arg(long = "label")]
        labels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            summary,
            seed,
            no_filter,
            max_rounds,
            tolerance,
            parallel,
        } => {
            let options = RunOptions {
                seed,
                no_filter,
                max_rounds,
                tolerance,
                parallel,
            };
            let result = cmd_run(&scenario, &out, summary.as_deref(), &options)?;
            match result.final_v_t {
                Some(v) => println!("rounds = {}, final V = {v:e}", result.rounds_executed),
                None => println!("rounds = {}, final V unavailable", result.rounds_executed),
            }
            Ok(())
        }
        Command::Report { scenario } => {
            print!("{}", cmd_report(&scenario)?);
            Ok(())
        }
        Command::Plot {
            traces,
            labels,
            out,
        } => cmd_plot(&traces, &labels, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
