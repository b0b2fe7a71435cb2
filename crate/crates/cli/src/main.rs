// `!(x >= 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{DesignArgs, GreedyArgs, TraceArgs, TradeoffArgs, VerifyArgs};
use crate::config::{Globals, RunConfig};
use crate::error::{CliError, CliResult};

/// Quantizer design for distributed detection under an eavesdropper's
/// KL-divergence budget. Divergences are in nats.
///
/// Exit codes: 0 ok, 1 verification failed, 2 invalid input, 3 solver
/// structure failure, 4 artifact I/O.
#[derive(Parser)]
#[command(name = "secquant", version)]
struct Cli {
    #[command(flatten)]
    globals: Globals,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal threshold for one sensor under a per-sensor Eve budget.
    Design(DesignArgs),
    /// Best FC divergence across a grid of Eve budgets.
    Tradeoff(TradeoffArgs),
    /// Greedy budget allocation over a sensor network.
    Greedy(GreedyArgs),
    /// Check a stored design or allocation with exact and simulated tests.
    Verify(VerifyArgs),
    /// Trace Eve's constraint boundary in ROC space.
    TraceBoundary(TraceArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.globals)?;
    let files = match &cli.command {
        Command::Design(a) => commands::design(&cfg, a)?,
        Command::Tradeoff(a) => commands::tradeoff(&cfg, a)?,
        Command::Greedy(a) => commands::greedy(&cfg, a)?,
        Command::TraceBoundary(a) => commands::trace_boundary(&cfg, a)?,
        Command::Verify(a) => {
            let (report, files) = commands::verify(&cfg, a)?;
            output::write_all(&files)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.no_information {
                eprintln!("note: no information: the design is on the diagonal at the fusion center");
            }
            println!("{}", if report.pass { "PASS" } else { "FAIL" });
            return if report.pass { Ok(()) } else { Err(CliError::VerificationFailed) };
        }
    };
    output::write_all(&files)?;
    for f in &files {
        eprintln!("wrote {}", f.path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::VerificationFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
