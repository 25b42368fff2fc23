//! `qwalk`: instance generation, seeded estimator runs, numerical lemma checks
//! and cost benchmarks, all reporting versioned JSON (or CSV for benchmarks).
//!
//! Exit codes: 0 success, 2 parameter error, 3 failed verification, 4 I/O.

mod bench;
mod report;
mod run;
mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{CliResult, Failure};

#[derive(Parser, Debug)]
#[command(name = "qwalk", version, about = "Quantum-walk estimators on trees and layered DAGs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed; every trial draws from its own stream of it.
    #[arg(long, global = true, env = "QWALK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent trials.
    #[arg(long, global = true, default_value_t = 1)]
    pub parallel: usize,
    /// Output format. CSV is only available for `bench`.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file.
    Gen(run::GenArgs),
    /// Estimate the edge count of a graph.
    EstimateSize(run::EstimateArgs),
    /// Search a tree for a marked vertex.
    Backtrack(run::BacktrackArgs),
    /// Evaluate an AND-OR formula of unknown shape.
    Evaluate(run::EvaluateArgs),
    /// Check spectral identities over a generated family.
    Verify(verify::VerifyArgs),
    /// Measure estimator cost along one parameter axis.
    Bench(bench::BenchArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if cli.global.parallel == 0 {
        return Err(Failure::Parameter("--parallel must be at least 1".into()));
    }
    if cli.global.format == Format::Csv && !matches!(cli.command, Command::Bench(_)) {
        return Err(Failure::Parameter("CSV output is only available for bench".into()));
    }
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => run::gen(g, a),
        Command::EstimateSize(a) => run::estimate_size(g, a),
        Command::Backtrack(a) => run::backtrack(g, a),
        Command::Evaluate(a) => run::evaluate(g, a),
        Command::Verify(a) => verify::verify(g, a),
        Command::Bench(a) => bench::bench(g, a),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("qwalk: {e}");
        std::process::exit(e.exit_code());
    }
}
