use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use boson_lr::scenario::{run_config_file, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boson-lr", version, about = "Light-cone experiments for interacting lattice bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config and write its reports.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized operators; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Largest dimension handled with dense matrices.
        #[arg(long)]
        dense_cap: Option<usize>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let Command::Run { config, out, seed, threads, dense_cap } = Cli::parse().command;
    let opts = RunOptions { seed, threads, dense_cap, out };
    let (outcome, files) =
        run_config_file(&config, &opts).with_context(|| format!("running {}", config.display()))?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    let failed = outcome.failed();
    println!("{}: {} rows, {failed} failed", outcome.manifest.scenario, outcome.report.rows.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
