use std::path::PathBuf;
use std::process::ExitCode;

use affqft_cli::{run_suite, RunConfig, RunError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affqft", version, about = "Affine lattice field theory suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (flat key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Reconstruct the source term from on-shell observables.
    DemoInhomogeneous,
    /// Moment and truncated-moment tables of the induced ground state.
    Moments,
    /// Tau and commutators across the causal cone.
    CausalityScan,
    /// Deform observables into a time window.
    Timeslice,
    /// Every suite listed under `suites` in the config.
    Run,
}

impl Command {
    fn suite(self) -> Option<&'static str> {
        match self {
            Command::DemoInhomogeneous => Some("demo-inhomogeneous"),
            Command::Moments => Some("moments"),
            Command::CausalityScan => Some("causality-scan"),
            Command::Timeslice => Some("timeslice"),
            Command::Run => None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path),
        None => RunConfig::parse(""),
    };
    let mut cfg = match cfg {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.out.clone());
    let suites: Vec<String> = match cli.command.suite() {
        Some(name) => vec![name.to_string()],
        None => cfg.suites.clone(),
    };

    let mut all_passed = true;
    for name in &suites {
        match run_suite(name, &cfg, &out) {
            Ok(outcome) => {
                let status = if outcome.passed { "PASS" } else { "FAIL" };
                println!("{status} {}: {} ({})", outcome.command, outcome.summary, outcome.table.display());
                all_passed &= outcome.passed;
            }
            Err(RunError::Config(e)) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
            Err(e) => {
                eprintln!("{name}: {e}");
                return ExitCode::from(1);
            }
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
