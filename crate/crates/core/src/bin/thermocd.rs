//! Command-line front end. Exit codes: 0 success, 1 physics or validation
//! failure, 2 configuration error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermocd::engine::config::SimConfig;
use thermocd::engine::output::{write_expansion, write_scan, write_trajectory};
use thermocd::engine::scan::{parse_grid, ScanAxis, DEFAULT_H_GRID, DEFAULT_OMEGA_GRID};
use thermocd::engine::{expand, integrate, scan, validate, Injection, ValidateOptions};
use thermocd::{Error, Result};

#[derive(Parser)]
#[command(name = "thermocd", version, about = "Driven open qubits under a thermal GKLS equation, with counterdiabatic control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Add the counterdiabatic term (overrides the config flag).
        #[arg(long)]
        cd: bool,
        /// Output CSV (`-` for stdout).
        #[arg(long)]
        out: PathBuf,
    },
    /// Steady-state trace distance over a grid of drive frequencies or gaps.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = ["omega", "h"])]
        axis: String,
        /// Comma-separated values; defaults to a built-in grid for the axis.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Perturbative state of the given order next to the integrated one.
    Expand {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
        order: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite; exits 1 if any check fails.
    Validate {
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = ValidateOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = ValidateOptions::default().instances)]
        instances: usize,
        /// Deliberate sign error: kms-sign, gauge-sign or delta-sign.
        #[arg(long, hide = true)]
        inject: Option<String>,
    },
}

fn open_out(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(std::io::stdout())));
    }
    let f = File::create(path).map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, cd, out } => {
            let mut cfg = SimConfig::from_file(&config)?;
            cfg.with_cd |= cd;
            let traj = integrate(&cfg)?;
            let mut w = open_out(&out)?;
            write_trajectory(&mut w, &cfg, &traj)?;
            w.flush()?;
            Ok(true)
        }
        Command::Scan { config, axis, grid, out, workers } => {
            let cfg = SimConfig::from_file(&config)?;
            let axis: ScanAxis = axis.parse()?;
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => match axis {
                    ScanAxis::Omega => DEFAULT_OMEGA_GRID.to_vec(),
                    ScanAxis::H => DEFAULT_H_GRID.to_vec(),
                },
            };
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let rows = scan(&cfg, axis, &grid, workers)?;
            let mut w = open_out(&out)?;
            write_scan(&mut w, &cfg, axis, &rows)?;
            w.flush()?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{} = {}: {}", axis.name(), r.value, r.error.as_deref().unwrap_or_default());
            }
            Ok(rows.iter().all(|r| r.error.is_none()))
        }
        Command::Expand { config, order, out } => {
            let cfg = SimConfig::from_file(&config)?;
            let table = expand(&cfg, order as usize)?;
            let mut w = open_out(&out)?;
            write_expansion(&mut w, &cfg, &table)?;
            w.flush()?;
            Ok(true)
        }
        Command::Validate { json, seed, instances, inject } => {
            let injection = inject.map(|s| s.parse::<Injection>()).transpose()?;
            if instances == 0 {
                return Err(Error::Config("instances must be at least 1".into()));
            }
            let report = validate(&ValidateOptions { seed, instances, injection });
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
