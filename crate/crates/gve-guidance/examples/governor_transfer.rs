//! The convergence governor walking a virtual target toward the commanded
//! orbit. A long prediction horizon leaves the response essentially
//! unchanged; a short one slows the approach because each accepted step
//! must be certified over a shorter forward window.
//!
//! Run with:
//!   cargo run --example governor_transfer

use gve_guidance::csv::write_csv;
use gve_guidance::scenario::load_scenario;
use gve_guidance::sim::run_governor_comparison;

fn main() {
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper_fig5.toml");
    let cfg = load_scenario(scenario).expect("bundled scenario parses");

    let horizons_s = [15.0 * 3600.0, 4.0 * 3600.0];
    let comparison = run_governor_comparison(&cfg, &horizons_s).expect("simulations complete");

    println!("run               converged  time [h]   min c1 [km]   max |u|");
    for s in comparison.summaries() {
        let label = match s.horizon_s {
            Some(h) => format!("governed {:4.1} h", h / 3600.0),
            None => "baseline       ".into(),
        };
        let time = s
            .convergence_time_s
            .map(|t| format!("{:8.2}", t / 3600.0))
            .unwrap_or_else(|| "       -".into());
        println!(
            "{label}   {:>9}  {time}   {:11.4}   {:.3e}",
            if s.converged { "yes" } else { "no" },
            s.min_c1_slack_km,
            s.max_u_norm
        );
    }

    for (h, log) in &comparison.governed {
        let accepted = log.governor_events.iter().filter(|e| e.kappa > 0.0).count();
        let kappa_max = log.governor_events.iter().map(|e| e.kappa).fold(0.0, f64::max);
        println!(
            "horizon {:4.1} h: {} target adjustments accepted, max step {kappa_max:.3}",
            h / 3600.0,
            accepted
        );
    }

    write_csv(&comparison, "governor_summary.csv").expect("write summary");
    println!("summary -> governor_summary.csv");
}
