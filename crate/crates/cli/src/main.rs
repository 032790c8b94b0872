//! `finopt`: temperature fields, flux and shape optimization for thin pin fins.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Experiment, Format, Overrides};
use error::{CliError, CliResult};
use output::Sink;

const DEFAULT_CONFIG: &str = include_str!("../configs/pin.toml");

#[derive(Debug, Parser)]
#[command(name = "finopt", version, about = "Pin fin heat transfer and shape optimization")]
struct Cli {
    /// Experiment file (TOML, lengths in mm); a built-in cylindrical pin when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_cells: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Temperature field and heat flux of the configured profile.
    Solve,
    /// Optimal surface density under the configured budget and cap.
    Optimize,
    /// Optimize once per width cap in `constraint.caps`.
    Sweep,
    /// Self-check against closed forms and invariants.
    Verify,
    /// Oscillating profiles and bang-bang densities.
    Sequence,
}

fn experiment(cli: &Cli) -> CliResult<Experiment> {
    let overrides = Overrides {
        out: cli.out.clone(),
        n_cells: cli.n_cells,
        format: cli.format,
        seed: cli.seed,
    };
    match &cli.config {
        Some(path) => config::load(path, &overrides),
        None => config::parse(DEFAULT_CONFIG, Path::new("."), &overrides),
    }
}

fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let exp = experiment(cli)?;
    let mut sink = Sink::create(&exp.out_dir, exp.format)?;
    match cli.command {
        Command::Solve => commands::solve(&exp, &mut sink)?,
        Command::Optimize => commands::run_optimize(&exp, &mut sink)?,
        Command::Sweep => commands::run_sweep(&exp, &mut sink)?,
        Command::Sequence => commands::run_sequence(&exp, &mut sink)?,
        Command::Verify => {
            let checks = verify::run(&exp, &mut sink)?;
            for c in &checks {
                eprintln!("{:?} {}: {}", c.status, c.name, c.detail);
            }
            let failed = verify::failures(&checks);
            if failed > 0 {
                return Err(CliError::Verification {
                    failed,
                    report: exp.out_dir.join("verify_report.json"),
                });
            }
        }
    }
    Ok(sink.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
