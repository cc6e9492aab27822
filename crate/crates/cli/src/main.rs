use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gardner_cli::commands::{self, Command};

#[derive(Parser)]
#[command(name = "gardner", version, about = "Breathers and ill-posedness experiments for the 5th order Gardner equation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML configuration; built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized checks (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Closed-form identity residuals over a parameter lattice.
    Residuals,
    /// Time-evolve an initial datum and record conserved quantities.
    Simulate,
    /// Linearized operator checks around the breather.
    Spectrum,
    /// Twin-packet divergence experiment.
    Illposed,
    /// Scaled H^s norms of modulated bumps.
    NormsScan,
    /// Breather mass quadrature against its closed form.
    MassCheck,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let command = match cli.cmd {
        Cmd::Residuals => Command::Residuals,
        Cmd::Simulate => Command::Simulate,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Illposed => Command::Illposed,
        Cmd::NormsScan => Command::NormsScan,
        Cmd::MassCheck => Command::MassCheck,
    };
    let opts = commands::Options { config: cli.config, out: cli.out, seed: cli.seed, strict: cli.strict };
    match commands::execute(command, &opts) {
        Ok(outcome) => {
            for l in &outcome.lines {
                println!("{l}");
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(outcome.exit_code(cli.strict) as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

