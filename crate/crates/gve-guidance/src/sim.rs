//! Closed-loop simulation drivers: single runs, the convergence grid
//! study, the terminal-level sweep, and governor comparisons.

use rayon::prelude::*;
use thiserror::Error;

use crate::constraints::{eccentricity_slack, instantaneously_feasible, periapsis_slack};
use crate::controller::{
    barrier_terms, lyapunov_quadratic, reset_weights, ControllerError, LoopConfig, LyapunovLaw,
    TargetState, Weights,
};
use crate::dynamics::ControlAccel;
use crate::elements::OrbitalElements;
use crate::governor::{
    governor_update, in_terminal_set, initialize_governor, terminal_level, GovernorError,
    GovernorState, TerminalLevelCache,
};
use crate::propagate::{ControlLaw, PropagateError, Stepper};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Governor(#[from] GovernorError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
}

/// Governor quantities attached to a log record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorSample {
    pub kappa: f64,
    pub x_des_virtual: OrbitalElements,
    /// Whether the current state lies in the terminal set of the current
    /// virtual target.
    pub in_terminal: bool,
}

/// One logged instant of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t_s: f64,
    pub elements: OrbitalElements,
    pub theta: f64,
    pub u: ControlAccel,
    /// Lyapunov value with respect to the active target.
    pub v: f64,
    pub b1: f64,
    pub b2: f64,
    pub q1: f64,
    pub q2: f64,
    /// Periapsis slack, km.
    pub c1_slack_km: f64,
    /// Eccentricity slack.
    pub c3_slack: f64,
    /// Control magnitude, km/s^2.
    pub u_norm: f64,
    pub governor: Option<GovernorSample>,
}

/// One governor target adjustment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorEvent {
    pub t_s: f64,
    pub kappa: f64,
    pub verified: bool,
    pub rejected_small_step: bool,
    pub x_des_virtual: OrbitalElements,
}

/// Entry status for the terminal set of the commanded target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalStatus {
    /// Terminal level of the commanded target.
    pub c0: f64,
    /// Earliest logged time from which the trajectory remains inside.
    pub first_entry_s: Option<f64>,
    pub entered: bool,
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub records: Vec<TrajectoryRecord>,
    pub governor_events: Vec<GovernorEvent>,
    pub terminal: TerminalStatus,
}

impl TrajectoryLog {
    pub fn min_c1_slack(&self) -> f64 {
        self.records.iter().map(|r| r.c1_slack_km).fold(f64::INFINITY, f64::min)
    }

    pub fn min_c3_slack(&self) -> f64 {
        self.records.iter().map(|r| r.c3_slack).fold(f64::INFINITY, f64::min)
    }

    pub fn max_u_norm(&self) -> f64 {
        self.records.iter().map(|r| r.u_norm).fold(0.0, f64::max)
    }

    /// True when any state or thrust bound is violated anywhere in the log.
    pub fn has_violation(&self, u_tolerance: f64, u_max: f64) -> bool {
        self.min_c1_slack() < 0.0
            || self.min_c3_slack() < 0.0
            || self.max_u_norm() > u_max + u_tolerance
    }
}

/// Runs one closed-loop simulation: saturated Lyapunov feedback, the
/// periodic weight reset, and (when configured) the governor overlay.
/// Records are logged at the configured period plus the final instant.
pub fn run_closed_loop(cfg: &ScenarioConfig) -> Result<TrajectoryLog, SimError> {
    let target = TargetState::new(cfg.x_des, &cfg.constraints)?;
    let x_des = *target.elements();
    let mut loop_cfg = cfg.loop_config();
    let c0_final = terminal_level(&x_des, &loop_cfg.weights, &cfg.constraints)?;

    let mut gov_state = match &cfg.governor {
        Some(_) => Some(initialize_governor(&cfg.x0, &cfg.constraints)?),
        None => None,
    };
    let mut cache = TerminalLevelCache::new();

    let mut y = nalgebra::SVector::<f64, 6>::zeros();
    y.fixed_rows_mut::<5>(0).copy_from(&cfg.x0.to_vector());
    y[5] = cfg.theta0;
    let elements_of = |y: &nalgebra::SVector<f64, 6>| {
        OrbitalElements::from_vector(&y.fixed_rows::<5>(0).into_owned())
    };

    let mut records = Vec::new();
    let mut events = Vec::new();

    let make_record = |t: f64,
                       y: &nalgebra::SVector<f64, 6>,
                       loop_cfg: &LoopConfig,
                       gov: Option<&GovernorState>,
                       cache: &mut TerminalLevelCache|
     -> Result<TrajectoryRecord, SimError> {
        let x = elements_of(y);
        let theta = y[5];
        let active_target = gov.map(|g| g.x_des_virtual).unwrap_or(x_des);
        let law = LyapunovLaw::from_loop_config(loop_cfg, active_target);
        let u = law
            .control(&x, theta, t)
            .map_err(|source| PropagateError::Dynamics { t, source })
            .map_err(SimError::Propagate)?;
        let b = barrier_terms(&x, &cfg.constraints, &loop_cfg.weights);
        let governor = gov.map(|g| {
            let in_terminal = cache
                .level(&g.x_des_virtual, &loop_cfg.weights, &cfg.constraints)
                .map(|c0| in_terminal_set(&x, &g.x_des_virtual, &loop_cfg.weights, c0))
                .unwrap_or(false);
            GovernorSample { kappa: g.kappa_last, x_des_virtual: g.x_des_virtual, in_terminal }
        });
        Ok(TrajectoryRecord {
            t_s: t,
            elements: x,
            theta,
            u,
            v: lyapunov_quadratic(&x, &active_target, &loop_cfg.weights) + b.b1 + b.b2,
            b1: b.b1,
            b2: b.b2,
            q1: loop_cfg.weights.q1,
            q2: loop_cfg.weights.q2,
            c1_slack_km: periapsis_slack(&x, &cfg.constraints),
            c3_slack: eccentricity_slack(&x, &cfg.constraints),
            u_norm: u.norm(),
            governor,
        })
    };

    records.push(make_record(0.0, &y, &loop_cfg, gov_state.as_ref(), &mut cache)?);

    let mut step_hints: (Option<f64>, Option<f64>) = (None, None);
    let mut t = 0.0;
    let mut k_log = 1u64;
    let mut k_reset = 1u64;
    let mut k_gov = 1u64;

    while t < cfg.t_final_s {
        let t_log = (k_log as f64 * cfg.log_period_s).min(cfg.t_final_s);
        let mut t_next = t_log;
        if cfg.reset_enabled {
            t_next = t_next.min(k_reset as f64 * cfg.reset_period_s);
        }
        if let Some(gcfg) = &cfg.governor {
            t_next = t_next.min(k_gov as f64 * gcfg.update_period_s);
        }
        t_next = t_next.min(cfg.t_final_s);

        // Integrate one segment under the frozen law.
        {
            let active_target =
                gov_state.as_ref().map(|g| g.x_des_virtual).unwrap_or(x_des);
            let law = LyapunovLaw::from_loop_config(&loop_cfg, active_target);
            let mut stepper = Stepper::new(&law, cfg.body, cfg.integ).with_hints(step_hints);
            stepper.integrate_to(&mut y, t, t_next).map_err(SimError::Propagate)?;
            step_hints = stepper.hints();
        }
        t = t_next;
        let x = elements_of(&y);

        // Governor target adjustment.
        if let (Some(gcfg), Some(gs)) = (&cfg.governor, gov_state.as_mut()) {
            if t == (k_gov as f64 * gcfg.update_period_s).min(cfg.t_final_s)
                && t == k_gov as f64 * gcfg.update_period_s
            {
                let outcome = governor_update(gs, &x, y[5], &x_des, gcfg, &loop_cfg, &mut cache);
                let target_changed = outcome.state.x_des_virtual != gs.x_des_virtual;
                *gs = outcome.state;
                events.push(GovernorEvent {
                    t_s: t,
                    kappa: outcome.kappa_applied,
                    verified: outcome.verified,
                    rejected_small_step: outcome.rejected_small_step,
                    x_des_virtual: gs.x_des_virtual,
                });
                k_gov += 1;
                // Weights are re-sized whenever the target moves, provided
                // the barriers are inactive.
                if target_changed {
                    if let Ok(w) = reset_weights(
                        &x,
                        &gs.x_des_virtual,
                        &cfg.constraints,
                        &loop_cfg.weights,
                    ) {
                        loop_cfg.weights = w;
                    }
                }
            }
        }

        // Periodic weight reset.
        if cfg.reset_enabled && t == k_reset as f64 * cfg.reset_period_s {
            let active_target = gov_state.as_ref().map(|g| g.x_des_virtual).unwrap_or(x_des);
            if let Ok(w) = reset_weights(&x, &active_target, &cfg.constraints, &loop_cfg.weights)
            {
                loop_cfg.weights = w;
            }
            k_reset += 1;
        }

        // Log sample.
        if t == t_log {
            records.push(make_record(t, &y, &loop_cfg, gov_state.as_ref(), &mut cache)?);
            if t == k_log as f64 * cfg.log_period_s {
                k_log += 1;
            }
        }
    }

    // Entry into the terminal set of the commanded target: the earliest
    // sample after which the trajectory never leaves.
    let weights_p = Weights::new(cfg.p_diag, 1.0, 1.0);
    let mut first_entry = None;
    for rec in records.iter().rev() {
        if lyapunov_quadratic(&rec.elements, &x_des, &weights_p) <= c0_final {
            first_entry = Some(rec.t_s);
        } else {
            break;
        }
    }
    let terminal =
        TerminalStatus { c0: c0_final, first_entry_s: first_entry, entered: first_entry.is_some() };

    Ok(TrajectoryLog { records, governor_events: events, terminal })
}

// ---------------------------------------------------------------------------
// Grid convergence study.

/// Mesh over initial semi-major axis and eccentricity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub a_step: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { a_min: 7378.0, a_max: 30378.0, a_step: 1000.0, e_min: 0.05, e_max: 0.85, e_step: 0.1 }
    }
}

impl GridSpec {
    fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
        let mut vals = Vec::new();
        let mut k = 0u32;
        loop {
            let v = min + step * k as f64;
            if v > max + 1e-9 * step {
                break;
            }
            vals.push(v);
            k += 1;
        }
        vals
    }

    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for a in Self::axis(self.a_min, self.a_max, self.a_step) {
            for e in Self::axis(self.e_min, self.e_max, self.e_step) {
                out.push((a, e));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub a0_km: f64,
    pub e0: f64,
    pub feasible: bool,
    pub converged: bool,
    pub convergence_time_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridStudyResult {
    pub cells: Vec<GridCell>,
}

impl GridStudyResult {
    pub fn feasible_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.feasible).count()
    }

    pub fn converged_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.converged).count()
    }
}

/// Sweeps initial `(a, e)` over the mesh, skipping instantaneously
/// infeasible cells, and marks convergence by entry into the terminal set
/// of the commanded target within the horizon. Cells run independently and
/// in parallel; per-cell failures are recorded and the study continues.
pub fn run_grid_study(
    base: &ScenarioConfig,
    grid: &GridSpec,
    horizon_s: f64,
) -> GridStudyResult {
    let cells: Vec<GridCell> = grid
        .cells()
        .par_iter()
        .map(|&(a0, e0)| {
            let mut cfg = base.clone();
            cfg.x0.a = a0;
            cfg.x0.e = e0;
            cfg.t_final_s = horizon_s;
            if !instantaneously_feasible(&cfg.x0, &cfg.constraints) {
                return GridCell {
                    a0_km: a0,
                    e0,
                    feasible: false,
                    converged: false,
                    convergence_time_s: None,
                    error: None,
                };
            }
            match run_closed_loop(&cfg) {
                Ok(log) => GridCell {
                    a0_km: a0,
                    e0,
                    feasible: true,
                    converged: log.terminal.entered,
                    convergence_time_s: log.terminal.first_entry_s,
                    error: None,
                },
                Err(err) => GridCell {
                    a0_km: a0,
                    e0,
                    feasible: true,
                    converged: false,
                    convergence_time_s: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    GridStudyResult { cells }
}

// ---------------------------------------------------------------------------
// Terminal-level sweep along the initial-to-target segment.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C0Point {
    /// Position along the segment, 0 at the initial state, 1 at the target.
    pub segment_fraction: f64,
    /// Semi-major axis of the virtual target, km.
    pub a_km: f64,
    /// Terminal level, or `None` when no positive level exists.
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct C0SweepResult {
    pub points: Vec<C0Point>,
}

/// Evaluates the terminal level at `n_points` evenly spaced virtual
/// targets on the segment from the initial state to the commanded target.
pub fn run_c0_sweep(cfg: &ScenarioConfig, n_points: usize) -> C0SweepResult {
    assert!(n_points >= 2, "sweep needs at least the two endpoints");
    let weights = cfg.initial_weights();
    let x0 = cfg.x0.to_vector();
    let xd = cfg.x_des.to_vector();
    let points = (0..n_points)
        .map(|k| {
            let s = k as f64 / (n_points - 1) as f64;
            let x = if k + 1 == n_points {
                cfg.x_des
            } else {
                OrbitalElements::from_vector(&(x0 + (xd - x0) * s))
            };
            let c0 = terminal_level(&x, &weights, &cfg.constraints).ok();
            C0Point { segment_fraction: s, a_km: x.a, c0 }
        })
        .collect();
    C0SweepResult { points }
}

// ---------------------------------------------------------------------------
// Governor comparison.

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// `None` for the governor-free baseline.
    pub horizon_s: Option<f64>,
    pub converged: bool,
    pub convergence_time_s: Option<f64>,
    pub min_c1_slack_km: f64,
    pub min_c3_slack: f64,
    pub max_u_norm: f64,
}

#[derive(Debug)]
pub struct GovernorComparison {
    pub baseline: TrajectoryLog,
    /// One governed run per requested horizon, in input order.
    pub governed: Vec<(f64, TrajectoryLog)>,
}

impl GovernorComparison {
    pub fn summaries(&self) -> Vec<RunSummary> {
        let summarize = |horizon_s: Option<f64>, log: &TrajectoryLog| RunSummary {
            horizon_s,
            converged: log.terminal.entered,
            convergence_time_s: log.terminal.first_entry_s,
            min_c1_slack_km: log.min_c1_slack(),
            min_c3_slack: log.min_c3_slack(),
            max_u_norm: log.max_u_norm(),
        };
        let mut out = vec![summarize(None, &self.baseline)];
        out.extend(self.governed.iter().map(|(h, log)| summarize(Some(*h), log)));
        out
    }
}

/// Runs the governor-free baseline plus one governed run per horizon.
/// An empty horizon list yields the baseline only.
pub fn run_governor_comparison(
    cfg: &ScenarioConfig,
    horizons_s: &[f64],
) -> Result<GovernorComparison, SimError> {
    let mut baseline_cfg = cfg.clone();
    baseline_cfg.governor = None;
    let baseline = run_closed_loop(&baseline_cfg)?;

    let mut governed = Vec::new();
    for &h in horizons_s {
        let mut run_cfg = cfg.clone();
        let mut gov = cfg.governor.unwrap_or(crate::governor::GovernorConfig {
            t_hor_s: h,
            update_period_s: crate::scenario::DEFAULT_UPDATE_PERIOD_S,
            bisection_iters: crate::scenario::DEFAULT_BISECTION_ITERS,
            delta: crate::scenario::DEFAULT_DELTA,
        });
        gov.t_hor_s = h;
        run_cfg.governor = Some(gov);
        governed.push((h, run_closed_loop(&run_cfg)?));
    }
    Ok(GovernorComparison { baseline, governed })
}
