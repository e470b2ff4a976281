//! Terminal-set level along the segment of virtual targets connecting the
//! initial state to the commanded target: for each target, the largest
//! sublevel set of the quadratic Lyapunov function inside which both
//! constraint margins hold.
//!
//! Run with:
//!   cargo run --example terminal_set_sweep

use gve_guidance::csv::write_csv;
use gve_guidance::scenario::load_scenario;
use gve_guidance::sim::run_c0_sweep;

fn main() {
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper_fig1.toml");
    let cfg = load_scenario(scenario).expect("bundled scenario parses");

    let sweep = run_c0_sweep(&cfg, 21);
    println!("fraction   a [km]      c0");
    for p in &sweep.points {
        match p.c0 {
            Some(c0) => println!("{:8.2}  {:9.1}   {c0:.6e}", p.segment_fraction, p.a_km),
            None => println!("{:8.2}  {:9.1}   (no positive level)", p.segment_fraction, p.a_km),
        }
    }
    let endpoint = sweep.points.last().unwrap();
    println!(
        "\nat the commanded target (a = {:.0} km): c0 = {:.6e}",
        endpoint.a_km,
        endpoint.c0.unwrap()
    );

    write_csv(&sweep, "terminal_set_sweep.csv").expect("write sweep");
    println!("table -> terminal_set_sweep.csv");
}
