//! Thin command-line front end over the simulation drivers.
//!
//! Exit codes: 0 success, 1 constraint violation detected, 2 configuration
//! error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gve_guidance::csv::{write_csv, CsvTable};
use gve_guidance::scenario::load_scenario;
use gve_guidance::sim::{
    run_c0_sweep, run_closed_loop, run_governor_comparison, run_grid_study, GridSpec,
    TrajectoryLog,
};

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Allowance over the thrust bound when flagging violations; covers the
/// round-off of the saturation scaling.
const U_TOLERANCE: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "gvesim", about = "Constrained Lyapunov guidance simulations", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario and write the trajectory log.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep initial (a, e) over a mesh and report convergence per cell.
    Grid {
        scenario: PathBuf,
        /// Semi-major axis mesh as min:max:step, km.
        #[arg(long, default_value = "7378:30378:1000")]
        a_range: String,
        /// Eccentricity mesh as min:max:step.
        #[arg(long, default_value = "0.05:0.85:0.1")]
        e_range: String,
        /// Simulation horizon per cell, hours.
        #[arg(long, default_value_t = 40.0)]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Terminal-level sweep along the initial-to-target segment.
    #[command(name = "c0-sweep")]
    C0Sweep {
        scenario: PathBuf,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Governor-free baseline plus one governed run per horizon.
    Governor {
        scenario: PathBuf,
        /// Comma-separated prediction horizons, hours.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<f64>,
        /// Output prefix; writes <prefix>_summary.csv and per-run logs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a scenario file.
    Validate { scenario: PathBuf },
}

fn parse_range(text: &str, flag: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<_> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--{flag} expects min:max:step, got {text:?}"));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    match nums {
        Ok(v) if v[2] > 0.0 && v[1] >= v[0] => Ok((v[0], v[1], v[2])),
        _ => Err(format!("--{flag}: invalid mesh {text:?}")),
    }
}

fn report_violations(log: &TrajectoryLog, u_max: f64) -> bool {
    let violated = log.has_violation(U_TOLERANCE, u_max);
    if violated {
        eprintln!(
            "constraint violation detected: min c1 = {:.6} km, min c3 = {:.6e}, max |u| = {:.6e} km/s^2",
            log.min_c1_slack(),
            log.min_c3_slack(),
            log.max_u_norm()
        );
    }
    violated
}

fn write_or_fail<T: CsvTable + ?Sized>(table: &T, path: &PathBuf) -> Result<(), u8> {
    write_csv(table, path).map_err(|err| {
        eprintln!("cannot write {}: {err}", path.display());
        EXIT_NUMERICAL
    })
}

fn run(cli: Cli) -> Result<u8, u8> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            let cfg = load_scenario(&scenario).map_err(|err| {
                eprintln!("{err}");
                EXIT_CONFIG
            })?;
            let log = run_closed_loop(&cfg).map_err(|err| {
                eprintln!("simulation failed: {err}");
                EXIT_NUMERICAL
            })?;
            write_or_fail(&log, &out)?;
            println!(
                "simulated {:.1} h, {} records -> {}",
                cfg.t_final_s / 3600.0,
                log.records.len(),
                out.display()
            );
            match log.terminal.first_entry_s {
                Some(t) => println!(
                    "entered terminal set (c0 = {:.6e}) at t = {:.1} h",
                    log.terminal.c0,
                    t / 3600.0
                ),
                None => println!("did not enter the terminal set within the horizon"),
            }
            Ok(if report_violations(&log, cfg.constraints.u_max) { EXIT_VIOLATION } else { 0 })
        }
        Command::Grid { scenario, a_range, e_range, horizon, out } => {
            let cfg = load_scenario(&scenario).map_err(|err| {
                eprintln!("{err}");
                EXIT_CONFIG
            })?;
            let (a_min, a_max, a_step) = parse_range(&a_range, "a-range").map_err(|msg| {
                eprintln!("{msg}");
                EXIT_CONFIG
            })?;
            let (e_min, e_max, e_step) = parse_range(&e_range, "e-range").map_err(|msg| {
                eprintln!("{msg}");
                EXIT_CONFIG
            })?;
            let grid = GridSpec { a_min, a_max, a_step, e_min, e_max, e_step };
            let result = run_grid_study(&cfg, &grid, horizon * 3600.0);
            write_or_fail(&result, &out)?;
            let errored = result.cells.iter().filter(|c| c.error.is_some()).count();
            println!(
                "grid: {} cells, {} feasible, {} converged, {} errored -> {}",
                result.cells.len(),
                result.feasible_cells(),
                result.converged_cells(),
                errored,
                out.display()
            );
            Ok(if errored > 0 { EXIT_NUMERICAL } else { 0 })
        }
        Command::C0Sweep { scenario, points, out } => {
            let cfg = load_scenario(&scenario).map_err(|err| {
                eprintln!("{err}");
                EXIT_CONFIG
            })?;
            if points < 2 {
                eprintln!("--points must be at least 2");
                return Err(EXIT_CONFIG);
            }
            let sweep = run_c0_sweep(&cfg, points);
            write_or_fail(&sweep, &out)?;
            if let Some(last) = sweep.points.last() {
                match last.c0 {
                    Some(c0) => println!("endpoint a = {:.1} km: c0 = {c0:.6e}", last.a_km),
                    None => println!("endpoint a = {:.1} km: no positive level", last.a_km),
                }
            }
            println!("{} sweep points -> {}", sweep.points.len(), out.display());
            Ok(0)
        }
        Command::Governor { scenario, horizons, out } => {
            let cfg = load_scenario(&scenario).map_err(|err| {
                eprintln!("{err}");
                EXIT_CONFIG
            })?;
            let horizons_s: Vec<f64> = horizons.iter().map(|h| h * 3600.0).collect();
            let comparison = run_governor_comparison(&cfg, &horizons_s).map_err(|err| {
                eprintln!("simulation failed: {err}");
                EXIT_NUMERICAL
            })?;
            let stem = out.display().to_string();
            write_or_fail(&comparison, &PathBuf::from(format!("{stem}_summary.csv")))?;
            write_or_fail(&comparison.baseline, &PathBuf::from(format!("{stem}_baseline.csv")))?;
            for (h, log) in &comparison.governed {
                let path = PathBuf::from(format!("{stem}_hor{}h.csv", h / 3600.0));
                write_or_fail(log, &path)?;
            }
            for summary in comparison.summaries() {
                let label = summary
                    .horizon_s
                    .map(|h| format!("governed {:>5.1} h", h / 3600.0))
                    .unwrap_or_else(|| "baseline       ".to_string());
                let time = summary
                    .convergence_time_s
                    .map(|t| format!("{:.2} h", t / 3600.0))
                    .unwrap_or_else(|| "none".to_string());
                println!("{label}: convergence {time}, max |u| = {:.4e}", summary.max_u_norm);
            }
            let violated = std::iter::once(&comparison.baseline)
                .chain(comparison.governed.iter().map(|(_, log)| log))
                .any(|log| report_violations(log, cfg.constraints.u_max));
            Ok(if violated { EXIT_VIOLATION } else { 0 })
        }
        Command::Validate { scenario } => {
            load_scenario(&scenario).map_err(|err| {
                eprintln!("{err}");
                EXIT_CONFIG
            })?;
            println!("{}: OK", scenario.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(code) => ExitCode::from(code),
    }
}
