use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lis_secrecy_sim::config::{apply_seed_override, load_config, SEED_ENV};
use lis_secrecy_sim::harness::run_experiment;
use lis_secrecy_sim::selftest::run_selftest;
use lis_secrecy_sim::{SimError, SimResult};

/// Secrecy-rate experiments over a surface-assisted link.
#[derive(Parser)]
#[command(name = "lis-secrecy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV.
    Run { config: PathBuf },
    /// Parse and check a configuration file without running it.
    Validate { config: PathBuf },
    /// Run the quick invariant checks.
    Selftest,
}

fn load(path: &PathBuf) -> SimResult<lis_secrecy_sim::config::ExperimentConfig> {
    let mut cfg = load_config(path)?;
    apply_seed_override(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> SimResult<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let rows = run_experiment(&cfg)?;
            let finals = rows.iter().filter(|r| r.is_final()).count();
            println!("{}: {} rows ({} final) written to {}", cfg.experiment, rows.len(), finals, cfg.output_path.display());
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({}, {} trials, seed {})", config.display(), cfg.experiment, cfg.trials, cfg.master_seed);
            if std::env::var_os(SEED_ENV).is_some() {
                println!("master seed taken from {SEED_ENV}");
            }
        }
        Command::Selftest => {
            let checks = run_selftest();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(SimError::SelfTest(failed));
            }
        }
    }
    Ok(())
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
