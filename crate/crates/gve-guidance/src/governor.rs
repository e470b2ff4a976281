//! Convergence governor.
//!
//! A virtual target slides from the initial state toward the commanded
//! target along the connecting segment. At each update instant the scalar
//! step is maximized by bisection, accepting a candidate only when a
//! forward simulation of the closed loop lands inside the terminal
//! sublevel set of the candidate target. Inside that set the barriers and
//! the saturation are inactive, so the set is positively invariant and
//! convergence to the final target follows.

use std::collections::HashMap;

use thiserror::Error;

use crate::constraints::{instantaneously_feasible, ConstraintConfig};
use crate::controller::{lyapunov_quadratic, LoopConfig, LyapunovLaw, Weights};
use crate::elements::OrbitalElements;
use crate::propagate::{propagate, PropagateError};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GovernorError {
    #[error("no positive terminal level exists: virtual target violates the constraint margins")]
    InfeasibleTerminalSet,
    #[error("initial state is not instantaneously feasible")]
    InfeasibleInitialState,
    #[error(transparent)]
    Propagate(#[from] PropagateError),
}

/// Governor tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorConfig {
    /// Prediction horizon, s.
    pub t_hor_s: f64,
    /// Interval between target adjustments, s.
    pub update_period_s: f64,
    /// Bisection iterations on the scalar step.
    pub bisection_iters: u32,
    /// Small-adjustment rejection threshold, measured in the P-weighted
    /// norm `sqrt(V0)`.
    pub delta: f64,
}

impl GovernorConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !self.t_hor_s.is_finite() || self.t_hor_s <= 0.0 {
            return Err("t_hor_s");
        }
        if !self.update_period_s.is_finite() || self.update_period_s <= 0.0 {
            return Err("update_period_s");
        }
        if self.bisection_iters == 0 {
            return Err("bisection_iters");
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err("delta");
        }
        Ok(())
    }
}

/// Virtual target and the last applied step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorState {
    pub x_des_virtual: OrbitalElements,
    /// Last applied scalar step, in `[0, 1]`.
    pub kappa_last: f64,
}

/// Result of one governor update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorOutcome {
    pub state: GovernorState,
    /// Step applied to the virtual target (zero when rejected or stalled).
    pub kappa_applied: f64,
    /// Whether the terminal condition of the resulting virtual target was
    /// verified by a forward prediction during this update.
    pub verified: bool,
    /// The accepted adjustment fell below `delta` and was discarded.
    pub rejected_small_step: bool,
}

/// Distance in the P-weighted norm `sqrt(V0)` used for the rejection rule.
pub fn p_distance(a: &OrbitalElements, b: &OrbitalElements, w: &Weights) -> f64 {
    lyapunov_quadratic(a, b, w).sqrt()
}

/// Sets the virtual target to the (feasible) initial state.
pub fn initialize_governor(
    x0: &OrbitalElements,
    cfg: &ConstraintConfig,
) -> Result<GovernorState, GovernorError> {
    if !instantaneously_feasible(x0, cfg) {
        return Err(GovernorError::InfeasibleInitialState);
    }
    Ok(GovernorState { x_des_virtual: *x0, kappa_last: 0.0 })
}

/// Largest `c0 > 0` such that both constraint-margin functions stay
/// non-positive over the sublevel set `{X : V0(P, X, x_des_virtual) <= c0}`.
///
/// The margin functions depend only on `(a, e)` and `P` is diagonal, so the
/// inner maximization reduces to the boundary of the two-dimensional
/// `(a, e)` ellipse slice; the outer problem is solved by bisection on
/// `c0`.
pub fn terminal_level(
    x_des_virtual: &OrbitalElements,
    w: &Weights,
    cfg: &ConstraintConfig,
) -> Result<f64, GovernorError> {
    let s1 = x_des_virtual.periapsis_radius() - cfg.r_min - cfg.eps1;
    let s2 = x_des_virtual.e - cfg.e_min - cfg.eps2;
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(GovernorError::InfeasibleTerminalSet);
    }

    let p_a = w.p_diag[0];
    let p_e = w.p_diag[1];
    let abar = x_des_virtual.a;
    let ebar = x_des_virtual.e;

    let feasible = |c0: f64| -> bool {
        // f2 = e_min + eps2 - e is linear in e; its maximum is closed-form.
        let beta = (2.0 * c0 / p_e).sqrt();
        if beta - s2 > 0.0 {
            return false;
        }
        max_periapsis_margin_violation(c0, abar, ebar, p_a, p_e, cfg) <= 0.0
    };

    // Guaranteed-infeasible bracket端: just past either closed-form bound.
    let hi_f2 = 0.5 * p_e * s2 * s2;
    let hi_f1 = 0.5 * p_a * (s1 / (1.0 - ebar)).powi(2);
    let mut hi = hi_f2.min(hi_f1) * (1.0 + 1e-9);
    let mut lo = 0.0;
    if feasible(hi) {
        // Round-off at the closed-form corner; expand until infeasible.
        for _ in 0..8 {
            hi *= 2.0;
            if !feasible(hi) {
                break;
            }
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    if lo <= 0.0 {
        return Err(GovernorError::InfeasibleTerminalSet);
    }
    Ok(lo)
}

/// Maximum of `r_min + eps1 - a(1-e)` over the boundary of the `(a, e)`
/// ellipse slice of the sublevel set. The objective is bilinear, so the
/// maximum lies on the boundary; a dense angular scan brackets the global
/// maximum and golden-section refines it.
fn max_periapsis_margin_violation(
    c0: f64,
    abar: f64,
    ebar: f64,
    p_a: f64,
    p_e: f64,
    cfg: &ConstraintConfig,
) -> f64 {
    let alpha = (2.0 * c0 / p_a).sqrt();
    let beta = (2.0 * c0 / p_e).sqrt();
    let k = cfg.r_min + cfg.eps1;
    let f = |tau: f64| -> f64 {
        let (sin_t, cos_t) = tau.sin_cos();
        k - (abar + alpha * cos_t) * (1.0 - ebar - beta * sin_t)
    };

    const N: usize = 512;
    let step = std::f64::consts::TAU / N as f64;
    let mut best_idx = 0usize;
    let mut best = f64::NEG_INFINITY;
    for idx in 0..N {
        let val = f(idx as f64 * step);
        if val > best {
            best = val;
            best_idx = idx;
        }
    }

    // Golden-section refinement in the bracketing interval.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a_lo = (best_idx as f64 - 1.0) * step;
    let mut a_hi = (best_idx as f64 + 1.0) * step;
    let mut x1 = a_hi - INV_PHI * (a_hi - a_lo);
    let mut x2 = a_lo + INV_PHI * (a_hi - a_lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if f1 < f2 {
            a_lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = a_lo + INV_PHI * (a_hi - a_lo);
            f2 = f(x2);
        } else {
            a_hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = a_hi - INV_PHI * (a_hi - a_lo);
            f1 = f(x1);
        }
    }
    best.max(f1.max(f2))
}

/// Membership in the (closed) terminal sublevel set.
pub fn in_terminal_set(
    x: &OrbitalElements,
    x_des_virtual: &OrbitalElements,
    w: &Weights,
    c0: f64,
) -> bool {
    lyapunov_quadratic(x, x_des_virtual, w) <= c0
}

/// Terminal state of a closed-loop forward simulation with the target held
/// at the virtual target and constant-in-time weights. The prediction
/// shares the harness integrator and tolerances; it is integrated as a
/// single segment.
pub fn predict_terminal(
    x: &OrbitalElements,
    theta: f64,
    x_des_virtual: &OrbitalElements,
    cfg: &LoopConfig,
    t_hor: f64,
) -> Result<OrbitalElements, GovernorError> {
    let law = LyapunovLaw::from_loop_config(cfg, *x_des_virtual);
    let log = propagate(x, theta, &law, &cfg.body, t_hor, t_hor.max(1.0), cfg.integ)?;
    Ok(log.last().expect("log is never empty").state.elements)
}

/// Memoizes terminal levels per virtual target. Valid for one fixed set of
/// weights and constraint bounds.
#[derive(Debug, Default)]
pub struct TerminalLevelCache {
    map: HashMap<(u64, u64), Option<f64>>,
}

impl TerminalLevelCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// The level depends only on `(a, e)` of the target for diagonal `P`.
    pub fn level(
        &mut self,
        x_des_virtual: &OrbitalElements,
        w: &Weights,
        cfg: &ConstraintConfig,
    ) -> Result<f64, GovernorError> {
        let key = (x_des_virtual.a.to_bits(), x_des_virtual.e.to_bits());
        let entry = self
            .map
            .entry(key)
            .or_insert_with(|| terminal_level(x_des_virtual, w, cfg).ok());
        entry.ok_or(GovernorError::InfeasibleTerminalSet)
    }
}

/// One governor step: maximize `kappa` in `[0, 1]` by bisection subject to
/// the predicted state landing in the terminal set of the candidate
/// virtual target. `kappa = 0` (keep the previous virtual target) is always
/// accepted as the fallback, and adjustments smaller than `delta` are
/// rejected unless they complete the approach to the final target.
#[allow(clippy::too_many_arguments)]
pub fn governor_update(
    gs: &GovernorState,
    x: &OrbitalElements,
    theta: f64,
    x_des_final: &OrbitalElements,
    gcfg: &GovernorConfig,
    cfg: &LoopConfig,
    cache: &mut TerminalLevelCache,
) -> GovernorOutcome {
    let prev = gs.x_des_virtual;
    let diff = x_des_final.to_vector() - prev.to_vector();
    let dist = p_distance(x_des_final, &prev, &cfg.weights);

    if dist == 0.0 {
        // Fixed point of the update law: the virtual target has arrived.
        return GovernorOutcome {
            state: GovernorState { x_des_virtual: prev, kappa_last: 1.0 },
            kappa_applied: 1.0,
            verified: true,
            rejected_small_step: false,
        };
    }

    let candidate_target = |kappa: f64| -> OrbitalElements {
        if kappa == 1.0 {
            *x_des_final
        } else {
            OrbitalElements::from_vector(&(prev.to_vector() + diff * kappa))
        }
    };
    let mut check = |kappa: f64| -> bool {
        let cand = candidate_target(kappa);
        let Ok(c0) = cache.level(&cand, &cfg.weights, &cfg.constraints) else {
            return false;
        };
        match predict_terminal(x, theta, &cand, cfg, gcfg.t_hor_s) {
            Ok(predicted) => in_terminal_set(&predicted, &cand, &cfg.weights, c0),
            Err(_) => false,
        }
    };

    let mut kappa = 0.0;
    let mut verified = false;
    if check(1.0) {
        kappa = 1.0;
        verified = true;
    } else {
        let mut hi = 1.0;
        for _ in 0..gcfg.bisection_iters {
            let mid = 0.5 * (kappa + hi);
            if check(mid) {
                kappa = mid;
                verified = true;
            } else {
                hi = mid;
            }
        }
    }

    if kappa == 0.0 {
        // Keeping the previous virtual target is feasible by construction;
        // re-verify rather than assume.
        let verified = check(0.0);
        return GovernorOutcome {
            state: GovernorState { x_des_virtual: prev, kappa_last: 0.0 },
            kappa_applied: 0.0,
            verified,
            rejected_small_step: false,
        };
    }

    let next = candidate_target(kappa);
    if kappa < 1.0 && kappa * dist < gcfg.delta {
        return GovernorOutcome {
            state: GovernorState { x_des_virtual: prev, kappa_last: 0.0 },
            kappa_applied: 0.0,
            verified,
            rejected_small_step: true,
        };
    }

    GovernorOutcome {
        state: GovernorState { x_des_virtual: next, kappa_last: kappa },
        kappa_applied: kappa,
        verified,
        rejected_small_step: false,
    }
}
