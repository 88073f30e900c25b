use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fmhsdm::bench::{run_experiment, ConfigLayer, ProblemKind};
use fmhsdm::Error;

/// Monte-Carlo benchmark of FM-HSDM and baseline solvers on synthetic
/// affinely constrained quadratic problems.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[arg(long, value_enum)]
    problem: Option<ProblemKind>,
    /// Dimension of each block.
    #[arg(long)]
    d: Option<usize>,
    /// Smallest diagonal entry of P, in (0, 1].
    #[arg(long)]
    p11: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Comma-separated solver names.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check Fejér and rate certificates on the FM-HSDM runs.
    #[arg(long)]
    certificates: bool,
    /// TOML file with the same keys as the flags plus `[params.<solver>]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } => 3,
        Error::Io { .. } | Error::Malformed(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = ConfigLayer {
        problem: cli.problem,
        d: cli.d,
        p11: cli.p11,
        runs: cli.runs,
        iters: cli.iters,
        solvers: cli.solvers,
        seed: cli.seed,
        out: cli.out,
        certificates: cli.certificates.then_some(true),
        params: Default::default(),
    };
    let layered = match &cli.config {
        Some(path) => ConfigLayer::from_file(path).map(|file| file.merge(flags)),
        None => Ok(flags),
    };
    let report = match layered.and_then(ConfigLayer::resolve).and_then(|c| run_experiment(&c)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    for c in &report.curves.solvers {
        match c.distance.last() {
            Some(last) if c.runs_used > 0 => {
                println!("{:<14} runs={:<4} final mean distance {last:.3e}", c.name, c.runs_used)
            }
            _ => println!("{:<14} runs=0    every run diverged", c.name),
        }
    }
    let failed: Vec<_> = report.certificates().filter(|(_, _, c)| !c.passed()).collect();
    for (run, name, _) in &failed {
        eprintln!("bench: certificate check failed for {name} in run {run}");
    }
    let diverged = report.divergences();
    for (name, run, iteration) in &diverged {
        eprintln!("bench: {name} diverged in run {run} at iteration {iteration}");
    }
    if diverged.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
