// `!(x > 0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "optidisc", version, about = "Optical disc read-out simulator")]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Lateral disc offset, e.g. `65nm` or `w0/6`.
    #[arg(long, global = true)]
    offset: Option<String>,
    #[arg(long, global = true)]
    na: Option<String>,
    /// Detected photons per read.
    #[arg(long, global = true)]
    photons: Option<String>,
    #[arg(long = "squeeze-db", global = true)]
    squeeze_db: Option<String>,
    /// Classical excess noise in dB (10 dB is a factor B = 10).
    #[arg(long = "excess-db", global = true)]
    excess_db: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Focal-plane field components and spot size.
    Focus,
    /// Paraxial and vectorial spot size against numerical aperture.
    ScanSpot,
    /// Far fields and the signal matrix.
    Read,
    /// Noise budgets for classical, shot and squeezed light.
    Noise,
    /// Monte Carlo error and ambiguity rates.
    Discriminate,
    /// Read-out data rate.
    Rate,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let flags = [
        ("offset", &cli.offset),
        ("na", &cli.na),
        ("photons", &cli.photons),
        ("squeeze_db", &cli.squeeze_db),
        ("excess_db", &cli.excess_db),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Focus => commands::focus(&cfg),
        Command::ScanSpot => commands::scan_spot(&cfg),
        Command::Read => commands::read(&cfg),
        Command::Noise => commands::noise(&cfg),
        Command::Discriminate => commands::discriminate(&cfg),
        Command::Rate => commands::rate(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("optidisc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
