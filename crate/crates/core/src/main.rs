use std::path::PathBuf;
use std::process::ExitCode;

use cavity_friction::cli::{parse_config, run, RunOptions};
use clap::Parser;

/// Equilibria, friction phases and fluctuation spectra of a cavity-coupled ion chain.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides the path in the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Write SI values instead of reduced units.
    #[arg(long)]
    si_units: bool,
    /// Check every emitted row against the model invariants.
    #[arg(long)]
    validate: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions { output: args.output, workers: args.workers, si_units: args.si_units, validate: args.validate };
    match run(&cfg, &opts) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
