//! Barrier-shaped Lyapunov feedback.
//!
//! The Lyapunov function is a quadratic in the element error plus two
//! one-sided quadratic barriers that activate inside safety margins of the
//! periapsis-radius and minimum-eccentricity constraints. The feedback is
//! the negated gradient image through the control-influence matrix,
//! saturated into the admissible control set. Along closed-loop
//! trajectories `dV/dt <= 0` in every saturation mode.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::constraints::{eccentricity_slack, periapsis_slack, ConstraintConfig};
use crate::dynamics::{gve_matrix, BodyParams, ControlAccel, DynamicsError};
use crate::elements::{ElementVector, OrbitalElements};
use crate::propagate::{ControlLaw, IntegratorOptions};

/// Lower floor applied to barrier weights so they stay strictly positive.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControllerError {
    #[error("weight reset requires inactive barriers (B1 = {b1:e}, B2 = {b2:e})")]
    ResetNotPermitted { b1: f64, b2: f64 },
    #[error("target orbit violates the constraint margins ({which})")]
    InfeasibleTarget { which: &'static str },
    #[error("projection operator is not idempotent on validation samples")]
    ProjectionNotIdempotent,
}

/// Diagonal quadratic weight and the two barrier weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Diagonal of the positive-definite quadratic weight, ordered
    /// `(a, e, i, raan, argp)`.
    pub p_diag: [f64; 5],
    /// Periapsis barrier weight, km^-2. Strictly positive.
    pub q1: f64,
    /// Eccentricity barrier weight, dimensionless. Strictly positive.
    pub q2: f64,
}

impl Weights {
    pub fn new(p_diag: [f64; 5], q1: f64, q2: f64) -> Self {
        Self { p_diag, q1, q2 }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.p_diag.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("p_diag");
        }
        if !self.q1.is_finite() || self.q1 <= 0.0 {
            return Err("q1");
        }
        if !self.q2.is_finite() || self.q2 <= 0.0 {
            return Err("q2");
        }
        Ok(())
    }

    /// `P d` for the diagonal quadratic weight.
    pub fn apply_p(&self, d: &ElementVector) -> ElementVector {
        let mut out = *d;
        for k in 0..5 {
            out[k] *= self.p_diag[k];
        }
        out
    }
}

/// Target orbit, validated to sit strictly beyond both constraint margins
/// so that the barriers vanish at the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    x_des: OrbitalElements,
}

impl TargetState {
    pub fn new(x_des: OrbitalElements, cfg: &ConstraintConfig) -> Result<Self, ControllerError> {
        if periapsis_slack(&x_des, cfg) <= cfg.eps1 {
            return Err(ControllerError::InfeasibleTarget { which: "periapsis margin" });
        }
        if eccentricity_slack(&x_des, cfg) <= cfg.eps2 {
            return Err(ControllerError::InfeasibleTarget { which: "eccentricity margin" });
        }
        Ok(Self { x_des })
    }

    pub fn elements(&self) -> &OrbitalElements {
        &self.x_des
    }
}

/// Barrier values and analytic gradients with respect to the five elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierTerms {
    pub b1: f64,
    pub b2: f64,
    pub grad_b1: ElementVector,
    pub grad_b2: ElementVector,
}

impl BarrierTerms {
    pub fn inactive(&self) -> bool {
        self.b1 == 0.0 && self.b2 == 0.0
    }

    /// Combined gradient `C(X)`.
    pub fn gradient(&self) -> ElementVector {
        self.grad_b1 + self.grad_b2
    }
}

/// Piecewise-quadratic barriers. `B1` activates when the periapsis radius
/// drops inside `r_min + eps1`, `B2` when the eccentricity drops inside
/// `e_min + eps2`; both are zero with zero gradient otherwise, and value
/// and gradient are continuous across the switch.
pub fn barrier_terms(x: &OrbitalElements, cfg: &ConstraintConfig, w: &Weights) -> BarrierTerms {
    let mut terms = BarrierTerms {
        b1: 0.0,
        b2: 0.0,
        grad_b1: ElementVector::zeros(),
        grad_b2: ElementVector::zeros(),
    };

    let rp_excess = x.periapsis_radius() - cfg.r_min - cfg.eps1;
    if rp_excess < 0.0 {
        terms.b1 = 0.5 * w.q1 * rp_excess * rp_excess;
        terms.grad_b1[0] = w.q1 * (1.0 - x.e) * rp_excess;
        terms.grad_b1[1] = -w.q1 * x.a * rp_excess;
    }

    let e_excess = x.e - cfg.e_min - cfg.eps2;
    if e_excess < 0.0 {
        terms.b2 = 0.5 * w.q2 * e_excess * e_excess;
        terms.grad_b2[1] = w.q2 * e_excess;
    }

    terms
}

/// Quadratic part of the Lyapunov function,
/// `V0 = (1/2) (X - X_des)' P (X - X_des)`, with raw (unwrapped) angle
/// differences.
pub fn lyapunov_quadratic(x: &OrbitalElements, x_des: &OrbitalElements, w: &Weights) -> f64 {
    let d = x.to_vector() - x_des.to_vector();
    0.5 * d.dot(&w.apply_p(&d))
}

/// Full Lyapunov function `V = V0 + B1 + B2`.
pub fn lyapunov_value(
    x: &OrbitalElements,
    x_des: &OrbitalElements,
    cfg: &ConstraintConfig,
    w: &Weights,
) -> f64 {
    let b = barrier_terms(x, cfg, w);
    lyapunov_quadratic(x, x_des, w) + b.b1 + b.b2
}

/// Unsaturated feedback `U_nom = -G'(X, theta) [P (X - X_des) + C(X)]`.
pub fn nominal_control(
    x: &OrbitalElements,
    theta: f64,
    x_des: &OrbitalElements,
    cfg: &ConstraintConfig,
    w: &Weights,
    body: &BodyParams,
) -> Result<ControlAccel, DynamicsError> {
    let g = gve_matrix(x, theta, body)?;
    let d = x.to_vector() - x_des.to_vector();
    let grad = w.apply_p(&d) + barrier_terms(x, cfg, w).gradient();
    Ok(ControlAccel::from_vector(&(-(g.transpose() * grad))))
}

/// Minimum-2-norm projection onto a convex, compact control set containing
/// the origin. Cloning shares the underlying operator.
#[derive(Clone)]
pub struct ConvexProjection {
    op: Arc<dyn Fn(ControlAccel) -> ControlAccel + Send + Sync>,
    label: &'static str,
}

impl fmt::Debug for ConvexProjection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConvexProjection({})", self.label)
    }
}

impl ConvexProjection {
    /// Projection onto the 2-norm ball of radius `u_max`.
    pub fn two_norm_ball(u_max: f64) -> Self {
        Self {
            op: Arc::new(move |u: ControlAccel| {
                let n = u.norm();
                if n <= u_max {
                    u
                } else {
                    u.scale(u_max / n)
                }
            }),
            label: "two-norm ball",
        }
    }

    /// Projection onto the axis-aligned box `|u_k| <= bounds_k`.
    pub fn axis_box(bounds: [f64; 3]) -> Self {
        Self {
            op: Arc::new(move |u: ControlAccel| {
                ControlAccel::new(
                    u.s.clamp(-bounds[0], bounds[0]),
                    u.t.clamp(-bounds[1], bounds[1]),
                    u.w.clamp(-bounds[2], bounds[2]),
                )
            }),
            label: "axis box",
        }
    }

    /// Wraps a user-supplied projection operator, validating idempotence
    /// (`op(op(u)) == op(u)`) on a deterministic sample grid.
    pub fn custom<F>(op: F, scale: f64) -> Result<Self, ControllerError>
    where
        F: Fn(ControlAccel) -> ControlAccel + Send + Sync + 'static,
    {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let u = ControlAccel::new(
                        scale * (i as f64 - 1.5),
                        scale * (j as f64 - 1.5),
                        scale * (k as f64 - 1.5),
                    );
                    let once = op(u);
                    let twice = op(once);
                    let diff = ControlAccel::new(
                        twice.s - once.s,
                        twice.t - once.t,
                        twice.w - once.w,
                    );
                    if diff.norm() > 1e-12 * scale.max(1.0) {
                        return Err(ControllerError::ProjectionNotIdempotent);
                    }
                }
            }
        }
        Ok(Self { op: Arc::new(op), label: "custom" })
    }

    pub fn project(&self, u: ControlAccel) -> ControlAccel {
        (self.op)(u)
    }
}

/// How the nominal control is folded into the admissible set.
#[derive(Debug, Clone)]
pub enum SaturationMode {
    /// Radial scaling onto the 2-norm ball of radius `u_max`, km/s^2.
    TwoNormBall { u_max: f64 },
    /// Independent per-channel clipping, bounds in km/s^2.
    InfNormBox { bounds: [f64; 3] },
    /// Minimum-2-norm projection onto a convex compact set containing 0.
    ConvexProjection(ConvexProjection),
}

/// Applies the configured saturation. In every mode the output lies in the
/// admissible set and satisfies the projection inequality
/// `-U_nom' U <= -U' U`.
pub fn saturate(u_nom: &ControlAccel, mode: &SaturationMode) -> ControlAccel {
    match mode {
        SaturationMode::TwoNormBall { u_max } => {
            let n = u_nom.norm();
            if n <= *u_max {
                *u_nom
            } else {
                u_nom.scale(u_max / n)
            }
        }
        SaturationMode::InfNormBox { bounds } => ControlAccel::new(
            u_nom.s.clamp(-bounds[0], bounds[0]),
            u_nom.t.clamp(-bounds[1], bounds[1]),
            u_nom.w.clamp(-bounds[2], bounds[2]),
        ),
        SaturationMode::ConvexProjection(proj) => proj.project(*u_nom),
    }
}

/// Barrier-weight lower bounds `(2 v0 / eps1^2, 2 v0 / eps2^2)` that keep
/// the constraints enforced along the closed loop when set at a time with
/// inactive barriers.
pub fn min_weights(v0: f64, cfg: &ConstraintConfig) -> (f64, f64) {
    (2.0 * v0 / (cfg.eps1 * cfg.eps1), 2.0 * v0 / (cfg.eps2 * cfg.eps2))
}

/// Periodic weight reset: replaces `q1, q2` by their minimum enforcing
/// values at the current state, floored at [`WEIGHT_FLOOR`]. Permitted only
/// while both barriers are inactive, so the Lyapunov value is unchanged.
pub fn reset_weights(
    x: &OrbitalElements,
    x_des: &OrbitalElements,
    cfg: &ConstraintConfig,
    w: &Weights,
) -> Result<Weights, ControllerError> {
    let b = barrier_terms(x, cfg, w);
    if !b.inactive() {
        return Err(ControllerError::ResetNotPermitted { b1: b.b1, b2: b.b2 });
    }
    let v0 = lyapunov_quadratic(x, x_des, w);
    let (q1, q2) = min_weights(v0, cfg);
    Ok(Weights { p_diag: w.p_diag, q1: q1.max(WEIGHT_FLOOR), q2: q2.max(WEIGHT_FLOOR) })
}

/// Everything the closed loop needs besides the target: body, constraint
/// bounds, weights, saturation, and integration tolerances.
#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub body: BodyParams,
    pub constraints: ConstraintConfig,
    pub weights: Weights,
    pub saturation: SaturationMode,
    pub integ: IntegratorOptions,
}

/// The saturated Lyapunov feedback as a propagation policy.
///
/// The target may be a governor virtual target, which is allowed to sit
/// inside the margin band; only the commanded final target is held to the
/// [`TargetState`] margin invariant.
pub struct LyapunovLaw {
    pub target: OrbitalElements,
    pub weights: Weights,
    pub constraints: ConstraintConfig,
    pub saturation: SaturationMode,
    pub body: BodyParams,
}

impl LyapunovLaw {
    pub fn from_loop_config(cfg: &LoopConfig, target: OrbitalElements) -> Self {
        Self {
            target,
            weights: cfg.weights,
            constraints: cfg.constraints,
            saturation: cfg.saturation.clone(),
            body: cfg.body,
        }
    }
}

impl ControlLaw for LyapunovLaw {
    fn control(
        &self,
        x: &OrbitalElements,
        theta: f64,
        _t: f64,
    ) -> Result<ControlAccel, DynamicsError> {
        let u_nom =
            nominal_control(x, theta, &self.target, &self.constraints, &self.weights, &self.body)?;
        Ok(saturate(&u_nom, &self.saturation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EARTH: BodyParams = BodyParams::EARTH;

    fn paper_cfg() -> ConstraintConfig {
        ConstraintConfig { r_min: 6628.0, e_min: 1e-3, u_max: 1e-3, eps1: 25.0, eps2: 5e-4 }
    }

    fn paper_weights() -> Weights {
        Weights::new([5e-11, 0.01, 0.005, 0.0075, 5e-4], 3e-4, 7.6e5)
    }

    fn paper_initial() -> OrbitalElements {
        OrbitalElements::new(21378.0, 0.65, std::f64::consts::PI / 10.0, 0.0, std::f64::consts::PI)
    }

    fn paper_target() -> OrbitalElements {
        OrbitalElements::new(
            6878.0,
            0.02,
            std::f64::consts::FRAC_PI_2,
            1.5 * std::f64::consts::PI,
            std::f64::consts::PI,
        )
    }

    #[test]
    fn barriers_inactive_far_from_margins() {
        let terms = barrier_terms(&paper_initial(), &paper_cfg(), &paper_weights());
        assert_eq!(terms.b1, 0.0);
        assert_eq!(terms.b2, 0.0);
        assert_eq!(terms.gradient(), ElementVector::zeros());
    }

    #[test]
    fn periapsis_barrier_value_inside_margin() {
        let cfg = paper_cfg();
        let w = Weights::new([1.0; 5], 1.0, 1.0);
        // a = 6650, e = 0: r_p = 6650 < 6653, excess -3 km.
        let x = OrbitalElements::new(6650.0, 0.0, 0.3, 0.0, 0.0);
        let terms = barrier_terms(&x, &cfg, &w);
        assert_relative_eq!(terms.b1, 4.5, max_relative = 1e-12);
        assert_relative_eq!(terms.grad_b1[0], -3.0, max_relative = 1e-12);
        assert_relative_eq!(terms.grad_b1[1], 6650.0 * 3.0, max_relative = 1e-12);
    }

    #[test]
    fn eccentricity_barrier_continuous_at_switch() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let at_switch =
            OrbitalElements::new(9000.0, cfg.e_min + cfg.eps2, 0.3, 0.0, 0.0);
        let terms = barrier_terms(&at_switch, &cfg, &w);
        assert_eq!(terms.b2, 0.0);
        let just_inside =
            OrbitalElements::new(9000.0, cfg.e_min + cfg.eps2 - 1e-12, 0.3, 0.0, 0.0);
        let inner = barrier_terms(&just_inside, &cfg, &w);
        assert!(inner.b2 < 1e-15);
    }

    #[test]
    fn lyapunov_value_zero_at_target_and_matches_hand_value() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        assert_eq!(lyapunov_value(&tgt, &tgt, &cfg, &w), 0.0);

        let v = lyapunov_value(&paper_initial(), &tgt, &cfg, &w);
        assert_relative_eq!(v, 0.0944633788946272, max_relative = 1e-12);
        // Barriers inactive there, so V = V0.
        assert_eq!(v, lyapunov_quadratic(&paper_initial(), &tgt, &w));
    }

    #[test]
    fn lyapunov_dominates_quadratic_part() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = OrbitalElements::new(
                rng.gen_range(6700.0..25000.0),
                rng.gen_range(0.0..0.9),
                rng.gen_range(0.1..3.0),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
            );
            let v = lyapunov_value(&x, &tgt, &cfg, &w);
            assert!(v >= lyapunov_quadratic(&x, &tgt, &w) - 1e-18);
        }
    }

    #[test]
    fn nominal_control_zero_at_target_and_linear_in_p() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        let u0 = nominal_control(&tgt, 1.3, &tgt, &cfg, &w, &EARTH).unwrap();
        assert_eq!(u0.norm(), 0.0);

        let x = paper_initial();
        let u1 = nominal_control(&x, 2.0, &tgt, &cfg, &w, &EARTH).unwrap();
        let mut doubled = w;
        for p in doubled.p_diag.iter_mut() {
            *p *= 2.0;
        }
        let u2 = nominal_control(&x, 2.0, &tgt, &cfg, &doubled, &EARTH).unwrap();
        assert_relative_eq!(u2.s, 2.0 * u1.s, max_relative = 1e-13);
        assert_relative_eq!(u2.t, 2.0 * u1.t, max_relative = 1e-13);
        assert_relative_eq!(u2.w, 2.0 * u1.w, max_relative = 1e-13);
    }

    /// Central finite differences of the Lyapunov function as an
    /// independent oracle for the feedback's descent identity
    /// `grad V . (G U_nom) = -|U_nom|^2`.
    #[test]
    fn directional_derivative_matches_finite_differences() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        let steps = [1.0, 1e-5, 1e-5, 1e-5, 1e-5];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = OrbitalElements::new(
                rng.gen_range(8000.0..25000.0),
                rng.gen_range(0.05..0.8),
                rng.gen_range(0.2..2.9),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
            );
            let theta = rng.gen_range(0.0..6.28);
            let u_nom = nominal_control(&x, theta, &tgt, &cfg, &w, &EARTH).unwrap();
            let g = gve_matrix(&x, theta, &EARTH).unwrap();
            let rates = g * u_nom.to_vector();

            let mut grad_fd = ElementVector::zeros();
            let base = x.to_vector();
            for k in 0..5 {
                let mut plus = base;
                let mut minus = base;
                plus[k] += steps[k];
                minus[k] -= steps[k];
                let vp = lyapunov_value(&OrbitalElements::from_vector(&plus), &tgt, &cfg, &w);
                let vm = lyapunov_value(&OrbitalElements::from_vector(&minus), &tgt, &cfg, &w);
                grad_fd[k] = (vp - vm) / (2.0 * steps[k]);
            }
            let lhs = grad_fd.dot(&rates);
            let rhs = -u_nom.norm_squared();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8, epsilon = 1e-24);
        }
    }

    /// Analytic barrier gradient against central finite differences away
    /// from the piecewise switch surfaces.
    #[test]
    fn barrier_gradient_matches_finite_differences() {
        let cfg = paper_cfg();
        let w = Weights::new([5e-11, 0.01, 0.005, 0.0075, 5e-4], 2e-4, 8e5);
        // Pick states with both barriers active and away from the switches.
        let states = [
            OrbitalElements::new(6645.0, 0.0012, 0.8, 0.2, 0.3),
            OrbitalElements::new(6660.0, 0.0011, 1.2, 0.5, 1.0),
        ];
        let steps = [1e-3, 1e-8, 1e-6, 1e-6, 1e-6];
        for x in states {
            let analytic = barrier_terms(&x, &cfg, &w);
            let base = x.to_vector();
            for k in 0..2 {
                let mut plus = base;
                let mut minus = base;
                plus[k] += steps[k];
                minus[k] -= steps[k];
                let tp = barrier_terms(&OrbitalElements::from_vector(&plus), &cfg, &w);
                let tm = barrier_terms(&OrbitalElements::from_vector(&minus), &cfg, &w);
                let fd = ((tp.b1 + tp.b2) - (tm.b1 + tm.b2)) / (2.0 * steps[k]);
                let exact = analytic.gradient()[k];
                assert_relative_eq!(fd, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn saturation_examples() {
        let ball = SaturationMode::TwoNormBall { u_max: 1e-3 };
        let u = saturate(&ControlAccel::new(2e-3, 0.0, 0.0), &ball);
        assert_relative_eq!(u.s, 1e-3, max_relative = 1e-15);
        assert_eq!((u.t, u.w), (0.0, 0.0));

        let boxed = SaturationMode::InfNormBox { bounds: [1e-3; 3] };
        let u = saturate(&ControlAccel::new(2e-3, 5e-4, -2e-3), &boxed);
        assert_eq!(u, ControlAccel::new(1e-3, 5e-4, -1e-3));
    }

    #[test]
    fn projection_ball_agrees_with_two_norm_mode() {
        let ball = SaturationMode::TwoNormBall { u_max: 1e-3 };
        let proj = SaturationMode::ConvexProjection(ConvexProjection::two_norm_ball(1e-3));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let u_nom = ControlAccel::new(
                rng.gen_range(-3e-3..3e-3),
                rng.gen_range(-3e-3..3e-3),
                rng.gen_range(-3e-3..3e-3),
            );
            let a = saturate(&u_nom, &ball);
            let b = saturate(&u_nom, &proj);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn custom_projection_rejects_non_idempotent_operator() {
        let bad = ConvexProjection::custom(|u| u.scale(0.5), 1e-3);
        assert!(matches!(bad, Err(ControllerError::ProjectionNotIdempotent)));
        let good = ConvexProjection::custom(
            |u| {
                let n = u.norm();
                if n <= 1e-3 {
                    u
                } else {
                    u.scale(1e-3 / n)
                }
            },
            1e-3,
        );
        assert!(good.is_ok());
    }

    #[test]
    fn min_weights_paper_values() {
        let cfg = paper_cfg();
        let v0 = 0.0944633788946272;
        let (q1, q2) = min_weights(v0, &cfg);
        assert_relative_eq!(q1, 3.0228281246280706e-4, max_relative = 1e-12);
        assert_relative_eq!(q2, 755707.0311570177, max_relative = 1e-12);
        assert_eq!(min_weights(0.0, &cfg), (0.0, 0.0));
    }

    #[test]
    fn reset_preserves_lyapunov_value_exactly() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        let x = paper_initial();
        let before = lyapunov_value(&x, &tgt, &cfg, &w);
        let reset = reset_weights(&x, &tgt, &cfg, &w).unwrap();
        let after = lyapunov_value(&x, &tgt, &cfg, &reset);
        assert_eq!(before, after);
        assert_eq!(reset.p_diag, w.p_diag);
    }

    #[test]
    fn reset_at_target_floors_weights() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        let reset = reset_weights(&tgt, &tgt, &cfg, &w).unwrap();
        assert_eq!(reset.q1, WEIGHT_FLOOR);
        assert_eq!(reset.q2, WEIGHT_FLOOR);
        assert!(reset.validate().is_ok());
    }

    #[test]
    fn reset_rejected_with_active_barrier() {
        let cfg = paper_cfg();
        let w = paper_weights();
        let tgt = paper_target();
        let inside = OrbitalElements::new(6640.0, 0.05, 0.8, 0.0, 0.0);
        assert!(matches!(
            reset_weights(&inside, &tgt, &cfg, &w),
            Err(ControllerError::ResetNotPermitted { .. })
        ));
    }

    #[test]
    fn target_state_validates_margins() {
        let cfg = paper_cfg();
        assert!(TargetState::new(paper_target(), &cfg).is_ok());
        let on_margin = OrbitalElements::new(6653.0 / (1.0 - 0.02), 0.02, 0.3, 0.0, 0.0);
        assert!(matches!(
            TargetState::new(on_margin, &cfg),
            Err(ControllerError::InfeasibleTarget { .. })
        ));
        let low_e = OrbitalElements::new(9000.0, 1.4e-3, 0.3, 0.0, 0.0);
        assert!(matches!(
            TargetState::new(low_e, &cfg),
            Err(ControllerError::InfeasibleTarget { .. })
        ));
    }

    proptest! {
        /// Saturated output is always admissible and satisfies the
        /// projection inequality -U_nom' U <= -U' U.
        #[test]
        fn saturation_membership_and_projection_inequality(
            s in -5e-3f64..5e-3, t in -5e-3f64..5e-3, w in -5e-3f64..5e-3
        ) {
            let u_nom = ControlAccel::new(s, t, w);
            let modes = [
                SaturationMode::TwoNormBall { u_max: 1e-3 },
                SaturationMode::InfNormBox { bounds: [1e-3, 8e-4, 5e-4] },
                SaturationMode::ConvexProjection(ConvexProjection::axis_box([1e-3, 8e-4, 5e-4])),
            ];
            for mode in modes {
                let u = saturate(&u_nom, &mode);
                match &mode {
                    SaturationMode::TwoNormBall { u_max } => {
                        prop_assert!(u.norm() <= *u_max * (1.0 + 1e-15));
                    }
                    SaturationMode::InfNormBox { bounds }  => {
                        prop_assert!(u.s.abs() <= bounds[0] && u.t.abs() <= bounds[1] && u.w.abs() <= bounds[2]);
                    }
                    SaturationMode::ConvexProjection(_) => {
                        prop_assert!(u.s.abs() <= 1e-3 && u.t.abs() <= 8e-4 && u.w.abs() <= 5e-4);
                    }
                }
                let dot = u_nom.s * u.s + u_nom.t * u.t + u_nom.w * u.w;
                prop_assert!(-dot <= -u.norm_squared() + 1e-18);
            }
        }
    }
}
