use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use zenopass::config::{self, Config};
use zenopass::run::CommandOutput;
use zenopass::{sweep, Error, Result};

/// Adiabatic-passage entanglement simulator for coupled cavity systems.
#[derive(Parser)]
#[command(name = "zenopass", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for result files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps; defaults to ZENOPASS_WORKERS or 1.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Named parameter preset applied over the config file.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one passage branch and write its population time series.
    Simulate { config: PathBuf },
    /// Map fidelity over a grid of cavity and atomic loss rates.
    Sweep { config: PathBuf },
    /// Report the strong-coupling spectrum and the protected subspace.
    Zeno { config: PathBuf },
    /// Run the full multi-atom entanglement protocol.
    Protocol {
        config: PathBuf,
        /// Number of atoms (n-atom family) or storage pairs (high-dim).
        #[arg(long)]
        n: Option<usize>,
        /// Scenario family: two-atom, n-atom, or high-dim.
        #[arg(long)]
        family: Option<String>,
    },
}

fn load_config(path: &PathBuf, preset: Option<&str>) -> Result<Config> {
    let text =
        fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
    config::load(&text, preset)
}

fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    let workers = match flag {
        Some(k) => k,
        None => match env::var("ZENOPASS_WORKERS") {
            Ok(text) => text.parse().map_err(|_| {
                Error::semantic("ZENOPASS_WORKERS", format!("'{text}' is not a worker count"))
            })?,
            Err(_) => 1,
        },
    };
    if workers == 0 {
        return Err(Error::semantic("--workers", "at least one worker is required"));
    }
    Ok(workers)
}

fn dispatch(cli: &Cli) -> Result<CommandOutput> {
    fs::create_dir_all(&cli.out)
        .map_err(|source| Error::Io { path: cli.out.clone(), source })?;
    match &cli.command {
        Command::Simulate { config } => {
            let config = load_config(config, cli.preset.as_deref())?;
            zenopass::run::simulate(&config, &cli.out)
        }
        Command::Sweep { config } => {
            let config = load_config(config, cli.preset.as_deref())?;
            let workers = resolve_workers(cli.workers)?;
            let output = sweep::sweep(&config, workers, &cli.out)?;
            for warning in &output.warnings {
                eprintln!("warning: {warning}");
            }
            Ok(CommandOutput { json: output.json, files: output.files })
        }
        Command::Zeno { config } => {
            let config = load_config(config, cli.preset.as_deref())?;
            zenopass::run::zeno_report(&config, &cli.out)
        }
        Command::Protocol { config, n, family } => {
            let mut config = load_config(config, cli.preset.as_deref())?;
            if let Some(family) = family {
                config::override_family(&mut config, family)?;
            }
            if let Some(n) = n {
                config::override_size(&mut config, *n)?;
            }
            zenopass::run::protocol(&config, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match dispatch(&cli) {
        Ok(output) => {
            print!("{}", output.json);
            eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
