//! Gauss variational equations in control-affine form.
//!
//! The five slow elements obey `Xdot = G(X, theta) U` with `U = (S, T, W)`
//! resolved in the radial/transverse/orbit-normal frame; the true anomaly
//! evolves under the Keplerian rate plus control-dependent terms. The system
//! is drift-free: `U = 0` freezes the slow elements exactly.

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::elements::{
    ElementVector, OrbitalElements, ECC_SINGULARITY_GUARD, INC_SINGULARITY_GUARD,
};

/// 5x3 control-influence matrix; rows `(a, e, i, raan, argp)`, columns `(S, T, W)`.
pub type GveMatrix = SMatrix<f64, 5, 3>;

/// Gravitational parameter of the primary body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    /// km^3/s^2
    pub mu: f64,
}

impl BodyParams {
    /// Earth, km^3/s^2.
    pub const EARTH: BodyParams = BodyParams { mu: 398_600.4418 };

    /// Keplerian orbital period `2 pi sqrt(a^3 / mu)`, s.
    pub fn orbital_period(&self, a: f64) -> f64 {
        2.0 * std::f64::consts::PI * (a.powi(3) / self.mu).sqrt()
    }
}

/// Thrust acceleration components in the STW frame, km/s^2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlAccel {
    /// Radial component, along `r_hat`.
    pub s: f64,
    /// Transverse component, along `h_hat x r_hat`.
    pub t: f64,
    /// Out-of-plane component, along `h_hat`.
    pub w: f64,
}

impl ControlAccel {
    pub const ZERO: ControlAccel = ControlAccel { s: 0.0, t: 0.0, w: 0.0 };

    pub fn new(s: f64, t: f64, w: f64) -> Self {
        Self { s, t, w }
    }

    pub fn norm(&self) -> f64 {
        (self.s * self.s + self.t * self.t + self.w * self.w).sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.s * self.s + self.t * self.t + self.w * self.w
    }

    pub fn is_zero(&self) -> bool {
        self.s == 0.0 && self.t == 0.0 && self.w == 0.0
    }

    pub fn to_vector(&self) -> SVector<f64, 3> {
        SVector::from([self.s, self.t, self.w])
    }

    pub fn from_vector(v: &SVector<f64, 3>) -> Self {
        Self { s: v[0], t: v[1], w: v[2] }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { s: k * self.s, t: k * self.t, w: k * self.w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("eccentricity {e:e} is below the singularity guard")]
    EccentricitySingularity { e: f64 },
    #[error("|sin i| = {sin_i:e} is below the singularity guard")]
    InclinationSingularity { sin_i: f64 },
}

/// Control-influence matrix `G(X, theta)` of the variational equations.
///
/// Entries `(1,3), (2,3), (3,1), (3,2), (4,1), (4,2)` are structurally zero.
/// Requires `e` above the eccentricity guard (row 5 divides by `e`) and
/// `|sin i|` above the inclination guard (row 4 divides by `sin i`).
pub fn gve_matrix(
    x: &OrbitalElements,
    theta: f64,
    body: &BodyParams,
) -> Result<GveMatrix, DynamicsError> {
    if x.e < ECC_SINGULARITY_GUARD {
        return Err(DynamicsError::EccentricitySingularity { e: x.e });
    }
    let sin_i = x.i.sin();
    if sin_i.abs() < INC_SINGULARITY_GUARD {
        return Err(DynamicsError::InclinationSingularity { sin_i });
    }

    let p = x.semi_latus_rectum();
    let r = x.radius(theta);
    let smp = (body.mu * p).sqrt();
    let (sin_th, cos_th) = theta.sin_cos();
    let cos_psi = x.cos_eccentric_anomaly(theta)?;
    let (sin_thw, cos_thw) = (theta + x.argp).sin_cos();
    let cot_i = x.i.cos() / sin_i;

    let mut g = GveMatrix::zeros();
    g[(0, 0)] = 2.0 * x.a * x.a * x.e * sin_th / smp;
    g[(0, 1)] = 2.0 * x.a * x.a * (p / r) / smp;
    g[(1, 0)] = p * sin_th / smp;
    g[(1, 1)] = p * (cos_psi + cos_th) / smp;
    g[(2, 2)] = r * cos_thw / smp;
    g[(3, 2)] = r * sin_thw / (smp * sin_i);
    g[(4, 0)] = -p * cos_th / (x.e * smp);
    g[(4, 1)] = (r + p) * sin_th / (x.e * smp);
    g[(4, 2)] = -r * sin_thw * cot_i / smp;
    Ok(g)
}

/// Rate of the true anomaly, rad/s.
///
/// With `U = 0` this is exactly the Keplerian rate `sqrt(mu p) / r^2`; the
/// in-plane control terms divide by `e` and are guarded.
pub fn theta_rate(
    x: &OrbitalElements,
    theta: f64,
    u: &ControlAccel,
    body: &BodyParams,
) -> Result<f64, DynamicsError> {
    let p = x.semi_latus_rectum();
    let r = x.radius(theta);
    let smp = (body.mu * p).sqrt();
    let kepler = smp / (r * r);
    if u.s == 0.0 && u.t == 0.0 {
        return Ok(kepler);
    }
    if x.e < ECC_SINGULARITY_GUARD {
        return Err(DynamicsError::EccentricitySingularity { e: x.e });
    }
    let (sin_th, cos_th) = theta.sin_cos();
    Ok(kepler + (p * cos_th * u.s - (p + r) * sin_th * u.t) / (x.e * smp))
}

/// Element rates `G(X, theta) U` together with the true-anomaly rate.
///
/// Zero control short-circuits to exactly zero element rates and the
/// Keplerian anomaly rate, regardless of singularity guards.
pub fn state_derivative(
    x: &OrbitalElements,
    theta: f64,
    u: &ControlAccel,
    body: &BodyParams,
) -> Result<(ElementVector, f64), DynamicsError> {
    if u.is_zero() {
        return Ok((ElementVector::zeros(), theta_rate(x, theta, u, body)?));
    }
    let g = gve_matrix(x, theta, body)?;
    let rates = g * u.to_vector();
    Ok((rates, theta_rate(x, theta, u, body)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EARTH: BodyParams = BodyParams::EARTH;

    fn paper_initial() -> OrbitalElements {
        OrbitalElements::new(21378.0, 0.65, std::f64::consts::PI / 10.0, 0.0, std::f64::consts::PI)
    }

    #[test]
    fn row_a_radial_entry_vanishes_at_periapsis() {
        let g = gve_matrix(&paper_initial(), 0.0, &EARTH).unwrap();
        assert_eq!(g[(0, 0)], 0.0);
    }

    #[test]
    fn row_i_entry_vanishes_at_quarter_argument_of_latitude() {
        let x = OrbitalElements::new(9000.0, 0.2, 1.0, 0.5, 0.7);
        let theta = std::f64::consts::FRAC_PI_2 - x.argp;
        let g = gve_matrix(&x, theta, &EARTH).unwrap();
        assert!(g[(2, 2)].abs() < 1e-12);
    }

    #[test]
    fn row_a_transverse_entry_matches_hand_evaluation() {
        // a=21378, e=0.65, theta=0: (2 a^2 / sqrt(mu p)) (1 + e)
        let g = gve_matrix(&paper_initial(), 0.0, &EARTH).unwrap();
        assert_relative_eq!(g[(0, 1)], 21499.069657742377, max_relative = 1e-12);
    }

    #[test]
    fn structural_zeros_hold_everywhere() {
        let states = [
            (7000.0, 0.05, 0.3, 0.1, 0.2, 0.0),
            (21378.0, 0.65, 1.2, 2.0, 3.0, 2.4),
            (15000.0, 0.4, 2.8, 5.0, 1.0, 4.9),
        ];
        for (a, e, i, raan, argp, theta) in states {
            let x = OrbitalElements::new(a, e, i, raan, argp);
            let g = gve_matrix(&x, theta, &EARTH).unwrap();
            for (row, col) in [(0, 2), (1, 2), (2, 0), (2, 1), (3, 0), (3, 1)] {
                assert_eq!(g[(row, col)], 0.0, "entry ({row},{col})");
            }
        }
    }

    #[test]
    fn theta_rate_unforced_is_keplerian() {
        let x = OrbitalElements::new(6878.0, 0.02, 0.5, 0.0, 0.0);
        let rate = theta_rate(&x, 0.0, &ControlAccel::ZERO, &EARTH).unwrap();
        assert_relative_eq!(rate, 1.1522231667945048e-3, max_relative = 1e-12);
    }

    #[test]
    fn theta_rate_radial_control_term_vanishes_at_quadrature() {
        let x = OrbitalElements::new(9000.0, 0.3, 0.8, 0.0, 0.0);
        let theta = std::f64::consts::FRAC_PI_2;
        let kepler = theta_rate(&x, theta, &ControlAccel::ZERO, &EARTH).unwrap();
        let forced = theta_rate(&x, theta, &ControlAccel::new(5e-4, 0.0, 0.0), &EARTH).unwrap();
        assert_relative_eq!(forced, kepler, epsilon = 1e-18);
    }

    #[test]
    fn drift_free_and_control_affine() {
        let x = OrbitalElements::new(12000.0, 0.3, 1.1, 0.4, 2.2);
        let (rates, _) = state_derivative(&x, 1.3, &ControlAccel::ZERO, &EARTH).unwrap();
        assert_eq!(rates, ElementVector::zeros());

        let u = ControlAccel::new(3e-4, -2e-4, 5e-4);
        let (r1, _) = state_derivative(&x, 1.3, &u, &EARTH).unwrap();
        let (r2, _) = state_derivative(&x, 1.3, &u.scale(2.5), &EARTH).unwrap();
        for k in 0..5 {
            assert_relative_eq!(r2[k], 2.5 * r1[k], max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_control_bypasses_guards_for_circular_orbits() {
        let circ = OrbitalElements::new(6878.0, 0.0, 0.5, 0.0, 0.0);
        let (rates, rate) = state_derivative(&circ, 2.0, &ControlAccel::ZERO, &EARTH).unwrap();
        assert_eq!(rates, ElementVector::zeros());
        assert!(rate > 0.0);
    }

    #[test]
    fn guards_raise_typed_errors() {
        let circ = OrbitalElements::new(6878.0, 0.0, 0.5, 0.0, 0.0);
        let u = ControlAccel::new(1e-4, 0.0, 0.0);
        assert!(matches!(
            gve_matrix(&circ, 0.0, &EARTH),
            Err(DynamicsError::EccentricitySingularity { .. })
        ));
        assert!(matches!(
            theta_rate(&circ, 0.0, &u, &EARTH),
            Err(DynamicsError::EccentricitySingularity { .. })
        ));
        let equatorial = OrbitalElements::new(9000.0, 0.2, 0.0, 0.0, 0.0);
        assert!(matches!(
            gve_matrix(&equatorial, 0.0, &EARTH),
            Err(DynamicsError::InclinationSingularity { .. })
        ));
    }
}
