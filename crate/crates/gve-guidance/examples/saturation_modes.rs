//! The three ways of folding the nominal feedback into the admissible
//! control set: 2-norm ball scaling, per-channel clipping, and the general
//! minimum-norm projection. The projection onto a ball reproduces the
//! 2-norm mode; the box projection matches per-channel clipping.
//!
//! Run with:
//!   cargo run --example saturation_modes

use gve_guidance::controller::{saturate, ConvexProjection, SaturationMode};
use gve_guidance::dynamics::ControlAccel;
use gve_guidance::scenario::{load_scenario, SaturationSpec};
use gve_guidance::sim::run_closed_loop;

fn main() {
    let u_nom = ControlAccel::new(2.0e-3, 5.0e-4, -2.0e-3);
    let modes: [(&str, SaturationMode); 4] = [
        ("two-norm ball", SaturationMode::TwoNormBall { u_max: 1e-3 }),
        ("inf-norm box", SaturationMode::InfNormBox { bounds: [1e-3; 3] }),
        (
            "projection (ball)",
            SaturationMode::ConvexProjection(ConvexProjection::two_norm_ball(1e-3)),
        ),
        (
            "projection (box)",
            SaturationMode::ConvexProjection(ConvexProjection::axis_box([1e-3; 3])),
        ),
    ];
    println!("nominal control ({:.1e}, {:.1e}, {:.1e}):", u_nom.s, u_nom.t, u_nom.w);
    for (name, mode) in &modes {
        let u = saturate(&u_nom, mode);
        println!(
            "  {name:<18} -> ({:+.4e}, {:+.4e}, {:+.4e})  |u| = {:.4e}",
            u.s,
            u.t,
            u.w,
            u.norm()
        );
    }

    // A short closed-loop leg under each mode.
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper_fig1.toml");
    let mut cfg = load_scenario(scenario).expect("bundled scenario parses");
    cfg.t_final_s = 4.0 * 3600.0;

    println!("\n4 h closed-loop leg per mode:");
    for spec in [
        SaturationSpec::TwoNormBall,
        SaturationSpec::InfNormBox { bounds: [1e-3; 3] },
        SaturationSpec::ProjectionBall,
    ] {
        cfg.saturation = spec.clone();
        let log = run_closed_loop(&cfg).expect("simulation completes");
        let last = log.records.last().unwrap();
        println!(
            "  {:?}: a -> {:8.1} km, min c1 slack {:8.3} km, max |u| {:.3e}",
            spec,
            last.elements.a,
            log.min_c1_slack(),
            log.max_u_norm()
        );
    }
}
