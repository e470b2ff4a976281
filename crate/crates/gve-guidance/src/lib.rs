//! Constrained Lyapunov feedback guidance for low-thrust orbital transfers
//! on Gauss variational equation dynamics.
//!
//! The library provides:
//!
//! - drift-free control-affine dynamics of the five slow orbital elements,
//!   with element/Cartesian conversions and an adaptive embedded
//!   Runge-Kutta propagator ([`dynamics`], [`cartesian`], [`propagate`]);
//! - trajectory constraints on periapsis radius, thrust magnitude, and
//!   minimum eccentricity ([`constraints`]);
//! - a barrier-shaped Lyapunov feedback with thrust saturation (2-norm
//!   ball, per-channel box, or general convex projection) plus weight
//!   sizing and periodic reset ([`controller`]);
//! - a convergence governor that walks a virtual target toward the
//!   commanded orbit, accepting each step only after a forward simulation
//!   verifies terminal-set entry ([`governor`]);
//! - scenario files, simulation drivers (single runs, convergence grid,
//!   terminal-level sweep, governor comparison), and deterministic CSV
//!   telemetry ([`scenario`], [`sim`], [`csv`]).
//!
//! The `examples/` directory holds one runnable example per capability;
//! the `gvesim` binary exposes the same drivers behind subcommands.

pub mod cartesian;
pub mod constraints;
pub mod controller;
pub mod csv;
pub mod dynamics;
pub mod elements;
pub mod governor;
pub mod propagate;
pub mod scenario;
pub mod sim;

pub use cartesian::{cartesian_to_elements, elements_to_cartesian, CartesianState};
pub use constraints::{
    eccentricity_slack, instantaneously_feasible, periapsis_slack, thrust_slack, ConstraintConfig,
};
pub use controller::{
    barrier_terms, lyapunov_quadratic, lyapunov_value, min_weights, nominal_control,
    reset_weights, saturate, BarrierTerms, ControllerError, ConvexProjection, LoopConfig,
    LyapunovLaw, SaturationMode, TargetState, Weights,
};
pub use dynamics::{
    gve_matrix, state_derivative, theta_rate, BodyParams, ControlAccel, DynamicsError, GveMatrix,
};
pub use elements::{ElementVector, OrbitalElements, OrbitalState};
pub use governor::{
    governor_update, in_terminal_set, initialize_governor, p_distance, predict_terminal,
    terminal_level, GovernorConfig, GovernorError, GovernorOutcome, GovernorState,
    TerminalLevelCache,
};
pub use propagate::{
    propagate, Coast, ControlLaw, IntegratorOptions, PropagateError, PropagationLog,
    PropagationSample, Stepper,
};
pub use scenario::{load_scenario, SaturationSpec, ScenarioConfig, ScenarioError};
pub use sim::{
    run_c0_sweep, run_closed_loop, run_governor_comparison, run_grid_study, C0SweepResult,
    GovernorComparison, GridSpec, GridStudyResult, SimError, TrajectoryLog, TrajectoryRecord,
};
