//! Convergence study over a mesh of initial (a, e): every instantaneously
//! feasible cell is simulated to the horizon and marked converged once it
//! enters the terminal set of the commanded target. Cells run in parallel.
//!
//! Run with:
//!   cargo run --example convergence_grid

use gve_guidance::csv::write_csv;
use gve_guidance::scenario::load_scenario;
use gve_guidance::sim::{run_grid_study, GridSpec};

fn main() {
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper_fig1.toml");
    let cfg = load_scenario(scenario).expect("bundled scenario parses");

    // A coarse 4 x 4 mesh keeps the example quick; the gvesim `grid`
    // subcommand runs the full mesh.
    let grid = GridSpec {
        a_min: 9378.0,
        a_max: 24378.0,
        a_step: 5000.0,
        e_min: 0.05,
        e_max: 0.65,
        e_step: 0.2,
    };
    let horizon_s = 40.0 * 3600.0;
    let result = run_grid_study(&cfg, &grid, horizon_s);

    println!("a0 [km]   e0     feasible  converged  time [h]");
    for cell in &result.cells {
        let time = cell
            .convergence_time_s
            .map(|t| format!("{:7.2}", t / 3600.0))
            .unwrap_or_else(|| "      -".into());
        println!(
            "{:8.0}  {:5.2}   {:>8}  {:>9}  {time}",
            cell.a0_km,
            cell.e0,
            if cell.feasible { "yes" } else { "no" },
            if cell.converged { "yes" } else { "no" },
        );
    }
    println!(
        "\n{} feasible cells, {} converged within {} h",
        result.feasible_cells(),
        result.converged_cells(),
        horizon_s / 3600.0
    );

    write_csv(&result, "convergence_grid.csv").expect("write grid");
    println!("table -> convergence_grid.csv");
}
