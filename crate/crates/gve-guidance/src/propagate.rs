//! Closed-loop propagation of the variational equations under a feedback law.
//!
//! The feedback is evaluated inside the derivative at every stage, so the
//! control is continuous in time rather than held between samples.
//!
//! Integration is adaptive with two embedded Runge-Kutta engines. Smooth
//! stretches run an explicit Dormand-Prince 5(4) pair. When the barrier
//! terms pin the trajectory onto a constraint-margin surface the closed
//! loop turns stiff (the saturated feedback flips over a metres-thin
//! layer) and the explicit step collapses; the segment is then redone with
//! an L-stable trapezoidal/BDF2 pair whose error estimate is filtered
//! through the stage matrix.

use nalgebra::{Matrix6, SVector};
use thiserror::Error;

use crate::dynamics::{state_derivative, BodyParams, ControlAccel, DynamicsError};
use crate::elements::{OrbitalElements, OrbitalState};

/// Integration state `[a, e, i, raan, argp, theta]`.
type StateVector = SVector<f64, 6>;

/// A feedback policy: a total function of the slow elements, the true
/// anomaly, and time.
pub trait ControlLaw {
    fn control(
        &self,
        x: &OrbitalElements,
        theta: f64,
        t: f64,
    ) -> Result<ControlAccel, DynamicsError>;
}

impl<F> ControlLaw for F
where
    F: Fn(&OrbitalElements, f64, f64) -> ControlAccel,
{
    fn control(
        &self,
        x: &OrbitalElements,
        theta: f64,
        t: f64,
    ) -> Result<ControlAccel, DynamicsError> {
        Ok(self(x, theta, t))
    }
}

/// Zero-thrust coast.
pub struct Coast;

impl ControlLaw for Coast {
    fn control(&self, _: &OrbitalElements, _: f64, _: f64) -> Result<ControlAccel, DynamicsError> {
        Ok(ControlAccel::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Relative tolerance per component.
    pub rel_tol: f64,
    /// Absolute tolerance per component.
    pub abs_tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PropagateError {
    #[error("step size underflow at t = {t} s (h = {h:e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("singular dynamics at t = {t} s: {source}")]
    Dynamics {
        t: f64,
        #[source]
        source: DynamicsError,
    },
}

/// One logged instant of a propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSample {
    pub t: f64,
    pub state: OrbitalState,
    /// Feedback control evaluated at the sample instant.
    pub u: ControlAccel,
}

/// Fixed-period samples covering `[0, t_span]`.
pub type PropagationLog = Vec<PropagationSample>;

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEP_GROWTH: f64 = 5.0;
const MIN_STEP_SHRINK: f64 = 0.2;
const SAFETY: f64 = 0.9;

/// Explicit steps below this are taken as a stiffness signal and the
/// segment falls back to the implicit engine. Smooth orbital dynamics at
/// the supported eccentricities never need steps this small.
const STIFF_SWITCH_H: f64 = 5e-3;

// Trapezoidal/BDF2 pair in SDIRK form: stage times (0, 2-sqrt(2), 1),
// diagonal 1 - sqrt(2)/2, second order, L-stable. The companion
// third-order quadrature weights serve as the error estimator.
const SQRT2: f64 = std::f64::consts::SQRT_2;
const TB_GAMMA: f64 = 2.0 - SQRT2;
const TB_D: f64 = 1.0 - SQRT2 / 2.0;
const TB_W: f64 = SQRT2 / 4.0;
const TB_BH1: f64 = (1.0 - SQRT2 / 4.0) / 3.0;
const TB_BH2: f64 = (3.0 * SQRT2 / 4.0 + 1.0) / 3.0;
const TB_BH3: f64 = TB_D / 3.0;

const NEWTON_MAX_ITERS: usize = 10;
/// Newton iteration target as a fraction of the step error budget.
const NEWTON_TOL: f64 = 0.03;

fn underflow_guard(t: f64) -> f64 {
    1e-9 * (1.0 + t.abs())
}

enum ExplicitOutcome {
    Done,
    /// Stiffness detected at the given time; the implicit engine takes
    /// over from the current state.
    Stiff(f64),
}

enum ImplicitOutcome {
    Done,
    /// The step size recovered; worth handing back to the explicit engine
    /// at the given time.
    Relaxed(f64),
}

/// Adaptive integrator over the six-component state. The adapted step
/// sizes of both engines carry over between calls; stage derivatives do
/// not, since the feedback law may change between segments.
pub struct Stepper<'a, L: ControlLaw> {
    law: &'a L,
    body: BodyParams,
    opts: IntegratorOptions,
    h_explicit: Option<f64>,
    h_implicit: Option<f64>,
}

impl<'a, L: ControlLaw> Stepper<'a, L> {
    pub fn new(law: &'a L, body: BodyParams, opts: IntegratorOptions) -> Self {
        Self { law, body, opts, h_explicit: None, h_implicit: None }
    }

    /// Seeds the step sizes with the hints from a previous segment.
    pub fn with_hints(mut self, hints: (Option<f64>, Option<f64>)) -> Self {
        (self.h_explicit, self.h_implicit) = hints;
        self
    }

    /// Adapted step sizes after the last call.
    pub fn hints(&self) -> (Option<f64>, Option<f64>) {
        (self.h_explicit, self.h_implicit)
    }

    fn rhs(&self, t: f64, y: &StateVector) -> Result<StateVector, DynamicsError> {
        let x = OrbitalElements::from_vector(&y.fixed_rows::<5>(0).into_owned());
        let theta = y[5];
        let u = self.law.control(&x, theta, t)?;
        let (rates, theta_dot) = state_derivative(&x, theta, &u, &self.body)?;
        let mut dy = StateVector::zeros();
        dy.fixed_rows_mut::<5>(0).copy_from(&rates);
        dy[5] = theta_dot;
        Ok(dy)
    }

    /// Weighted RMS error norm; 1.0 is the acceptance boundary.
    fn error_norm(&self, err: &StateVector, y: &StateVector, y_new: &StateVector) -> f64 {
        let mut acc = 0.0;
        for k in 0..6 {
            let scale = self.opts.abs_tol + self.opts.rel_tol * y[k].abs().max(y_new[k].abs());
            let ratio = err[k] / scale;
            acc += ratio * ratio;
        }
        (acc / 6.0).sqrt()
    }

    fn initial_step(&self, y: &StateVector, remaining: f64) -> f64 {
        let period = self.body.orbital_period(y[0].max(1.0));
        (period / 200.0).min(remaining).max(1e-6)
    }

    /// Advances the state in place from `t0` to `t1`, handing the state
    /// between the explicit and implicit engines as stiffness comes and
    /// goes. Each hand-over happens at an accepted state, never inside a
    /// trial step.
    pub fn integrate_to(
        &mut self,
        y: &mut StateVector,
        t0: f64,
        t1: f64,
    ) -> Result<(), PropagateError> {
        debug_assert!(t1 >= t0);
        let mut t = t0;
        // Step threshold for handing back to the explicit engine; doubled
        // after every hand-back within one call to damp thrashing.
        let mut relax_h = 50.0 * STIFF_SWITCH_H;
        while t < t1 {
            match self.explicit_segment(y, t, t1)? {
                ExplicitOutcome::Done => return Ok(()),
                ExplicitOutcome::Stiff(t_stiff) => t = t_stiff,
            }
            match self.implicit_segment(y, t, t1, relax_h)? {
                ImplicitOutcome::Done => return Ok(()),
                ImplicitOutcome::Relaxed(t_relaxed) => t = t_relaxed,
            }
            relax_h *= 2.0;
        }
        Ok(())
    }

    /// Dormand-Prince 5(4). Trial-stage failures and step collapse are
    /// reported as stiffness rather than errors; only a failure to
    /// evaluate the derivative at the current state is fatal.
    fn explicit_segment(
        &mut self,
        y: &mut StateVector,
        t0: f64,
        t1: f64,
    ) -> Result<ExplicitOutcome, PropagateError> {
        let mut t = t0;
        let mut h = self.h_explicit.unwrap_or_else(|| self.initial_step(y, t1 - t0));
        let mut k1 = self
            .rhs(t, y)
            .map_err(|source| PropagateError::Dynamics { t, source })?;

        while t < t1 {
            h = h.min(t1 - t);
            if h < STIFF_SWITCH_H.max(underflow_guard(t)) {
                self.h_explicit = None;
                return Ok(ExplicitOutcome::Stiff(t));
            }

            let stages = (|| -> Result<(StateVector, StateVector, f64), DynamicsError> {
                let k2 = self.rhs(t + A21 * h, &(*y + k1 * (A21 * h)))?;
                let k3 = self.rhs(t + 0.3 * h, &(*y + (k1 * A31 + k2 * A32) * h))?;
                let k4 = self.rhs(t + 0.8 * h, &(*y + (k1 * A41 + k2 * A42 + k3 * A43) * h))?;
                let k5 = self.rhs(
                    t + (8.0 / 9.0) * h,
                    &(*y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
                )?;
                let k6 = self.rhs(
                    t + h,
                    &(*y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
                )?;
                let y_new = *y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
                let k7 = self.rhs(t + h, &y_new)?;
                let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
                let norm = self.error_norm(&err, y, &y_new);
                Ok((y_new, k7, norm))
            })();

            match stages {
                Ok((y_new, k7, norm)) if norm <= 1.0 => {
                    t += h;
                    *y = y_new;
                    k1 = k7; // first-same-as-last
                    let factor = if norm == 0.0 {
                        MAX_STEP_GROWTH
                    } else {
                        (SAFETY * norm.powf(-0.2)).clamp(MIN_STEP_SHRINK, MAX_STEP_GROWTH)
                    };
                    h *= factor;
                }
                Ok((_, _, norm)) => {
                    h *= (SAFETY * norm.powf(-0.2)).clamp(MIN_STEP_SHRINK, 1.0);
                }
                // A trial stage left the valid domain: shrink, and let the
                // stiffness switch take over if that does not resolve it.
                Err(_) => h *= MIN_STEP_SHRINK,
            }
        }
        self.h_explicit = Some(h);
        Ok(ExplicitOutcome::Done)
    }

    /// Finite-difference Jacobian of the closed-loop derivative.
    fn jacobian(
        &self,
        t: f64,
        y: &StateVector,
        f0: &StateVector,
    ) -> Result<Matrix6<f64>, DynamicsError> {
        let mut jac = Matrix6::zeros();
        let sqrt_eps = f64::EPSILON.sqrt();
        for col in 0..6 {
            let scale = self.opts.abs_tol / self.opts.rel_tol + y[col].abs();
            let eps = sqrt_eps * scale.max(1e-6);
            let mut y_eps = *y;
            y_eps[col] += eps;
            let f_eps = self.rhs(t, &y_eps)?;
            jac.set_column(col, &((f_eps - f0) / eps));
        }
        Ok(jac)
    }

    /// Newton solve of one diagonally implicit stage:
    /// `y_stage = base + d h f(t_stage, y_stage)`.
    fn solve_stage(
        &self,
        lu: &nalgebra::LU<f64, nalgebra::U6, nalgebra::U6>,
        t_stage: f64,
        base: &StateVector,
        dh: f64,
        predictor: StateVector,
        y_ref: &StateVector,
    ) -> Option<(StateVector, StateVector)> {
        let mut y_stage = predictor;
        for _ in 0..NEWTON_MAX_ITERS {
            let f_stage = self.rhs(t_stage, &y_stage).ok()?;
            let residual = y_stage - base - f_stage * dh;
            let delta = lu.solve(&residual)?;
            y_stage -= delta;
            if self.error_norm(&delta, y_ref, &y_stage) <= NEWTON_TOL {
                let f_final = self.rhs(t_stage, &y_stage).ok()?;
                return Some((y_stage, f_final));
            }
        }
        None
    }

    /// L-stable trapezoidal/BDF2 stepping for the stiff sliding phases.
    /// Returns control to the explicit engine once the accepted step has
    /// grown past `relax_h`.
    fn implicit_segment(
        &mut self,
        y: &mut StateVector,
        t0: f64,
        t1: f64,
        relax_h: f64,
    ) -> Result<ImplicitOutcome, PropagateError> {
        let mut t = t0;
        let mut h = self.h_implicit.unwrap_or(STIFF_SWITCH_H).min(t1 - t0);

        while t < t1 {
            if t > t0 && h >= relax_h {
                self.h_implicit = Some(h);
                self.h_explicit = Some(h);
                return Ok(ImplicitOutcome::Relaxed(t));
            }
            h = h.min(t1 - t);
            if h < underflow_guard(t) {
                return Err(PropagateError::StepSizeUnderflow { t, h });
            }
            let f_n = self
                .rhs(t, y)
                .map_err(|source| PropagateError::Dynamics { t, source })?;
            let jac = self
                .jacobian(t, y, &f_n)
                .map_err(|source| PropagateError::Dynamics { t, source })?;

            // Step attempts reuse the Jacobian; only the step size changes.
            loop {
                if h < underflow_guard(t) {
                    return Err(PropagateError::StepSizeUnderflow { t, h });
                }
                let m = Matrix6::identity() - jac * (TB_D * h);
                let lu = m.lu();

                let attempt = (|| -> Option<(StateVector, StateVector, f64)> {
                    // Trapezoidal stage to t + gamma h.
                    let base1 = *y + f_n * (TB_D * h);
                    let (y_m, f_m) = self.solve_stage(
                        &lu,
                        t + TB_GAMMA * h,
                        &base1,
                        TB_D * h,
                        *y + f_n * (TB_GAMMA * h),
                        y,
                    )?;
                    // BDF2 stage to t + h.
                    let base2 = *y + (f_n + f_m) * (TB_W * h);
                    let (y_new, f_new) = self.solve_stage(
                        &lu,
                        t + h,
                        &base2,
                        TB_D * h,
                        y_m + f_m * ((1.0 - TB_GAMMA) * h),
                        y,
                    )?;
                    let err_raw = (f_n * (TB_BH1 - TB_W)
                        + f_m * (TB_BH2 - TB_W)
                        + f_new * (TB_BH3 - TB_D))
                        * h;
                    // Filter the estimate through the stage matrix so it
                    // stays bounded in the stiff limit.
                    let err = lu.solve(&err_raw)?;
                    let norm = self.error_norm(&err, y, &y_new);
                    Some((y_new, f_new, norm))
                })();

                match attempt {
                    Some((y_new, _, norm)) if norm <= 1.0 => {
                        t += h;
                        *y = y_new;
                        let factor = if norm == 0.0 {
                            MAX_STEP_GROWTH
                        } else {
                            (SAFETY * norm.powf(-1.0 / 3.0))
                                .clamp(MIN_STEP_SHRINK, MAX_STEP_GROWTH)
                        };
                        h *= factor;
                        break;
                    }
                    Some((_, _, norm)) => {
                        h *= (SAFETY * norm.powf(-1.0 / 3.0)).clamp(MIN_STEP_SHRINK, 1.0);
                    }
                    // Newton failed to converge or a trial left the domain.
                    None => h *= 0.25,
                }
            }
        }
        self.h_implicit = Some(h);
        Ok(ImplicitOutcome::Done)
    }
}

/// Integrates the closed loop from `(x0, theta0)` over `[0, t_span]`,
/// sampling the log every `log_period` seconds (the final instant is always
/// logged). `t_span = 0` yields a log holding exactly the initial state.
pub fn propagate<L: ControlLaw>(
    x0: &OrbitalElements,
    theta0: f64,
    law: &L,
    body: &BodyParams,
    t_span: f64,
    log_period: f64,
    opts: IntegratorOptions,
) -> Result<PropagationLog, PropagateError> {
    debug_assert!(x0.validate().is_ok(), "invalid initial elements");
    debug_assert!(t_span >= 0.0 && log_period > 0.0);

    let mut y = StateVector::zeros();
    y.fixed_rows_mut::<5>(0).copy_from(&x0.to_vector());
    y[5] = theta0;

    let sample = |t: f64, y: &StateVector| -> Result<PropagationSample, PropagateError> {
        let x = OrbitalElements::from_vector(&y.fixed_rows::<5>(0).into_owned());
        let theta = y[5];
        let u = law
            .control(&x, theta, t)
            .map_err(|source| PropagateError::Dynamics { t, source })?;
        Ok(PropagationSample { t, state: OrbitalState::new(x, theta), u })
    };

    let mut log = vec![sample(0.0, &y)?];
    if t_span == 0.0 {
        return Ok(log);
    }

    let mut stepper = Stepper::new(law, *body, opts);
    let mut t = 0.0;
    let mut k = 1u64;
    while t < t_span {
        let t_next = (k as f64 * log_period).min(t_span);
        stepper.integrate_to(&mut y, t, t_next)?;
        log.push(sample(t_next, &y)?);
        t = t_next;
        k += 1;
    }
    Ok(log)
}
