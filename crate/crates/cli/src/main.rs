use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oam_bepre_cli::{configure_threads, execute, load_config, CliError, Command};

/// OAM link simulator for misaligned uniform circular arrays.
#[derive(Debug, Parser)]
#[command(name = "oam-bepre", version)]
struct Cli {
    /// Also report the rate with linear singular values in the SNR.
    #[arg(long, global = true)]
    strict_eq17: bool,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, clap::Args)]
struct Io {
    /// Experiment description (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Channel matrix of the configured geometry (CSV, or JSON for `.json`).
    Channel(Io),
    /// Beamforming and pre-detection matrices plus their verification.
    Bepre(Io),
    /// Spectrum efficiency with and without BePre over the configured grid.
    CapacitySweep(Io),
    /// As `capacity-sweep`, plus Monte-Carlo symbol error rates.
    Ser(Io),
    /// Operation counts for joint and per-mode ML detection.
    Complexity(Io),
}

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads()?;
    let (command, io) = match cli.command {
        Sub::Channel(io) => (Command::Channel, io),
        Sub::Bepre(io) => (Command::Bepre, io),
        Sub::CapacitySweep(io) => (Command::CapacitySweep, io),
        Sub::Ser(io) => (Command::Ser, io),
        Sub::Complexity(io) => (Command::Complexity, io),
    };
    let spec = load_config(&io.config)?;
    execute(command, &spec, &io.out, cli.strict_eq17)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
