//! Classical orbital elements and the elementary conic geometry built on them.
//!
//! The five slow elements `(a, e, i, raan, argp)` form the controlled state;
//! the true anomaly is carried separately as a time-varying parameter and is
//! kept unwrapped (monotonically increasing along a trajectory).

use nalgebra::SVector;

use crate::dynamics::DynamicsError;

/// Denominator guard below which eccentricity is treated as singular.
pub const ECC_SINGULARITY_GUARD: f64 = 1e-9;

/// Guard on `|sin i|` below which the node is undefined.
pub const INC_SINGULARITY_GUARD: f64 = 1e-9;

/// Five-dimensional element vector ordered `(a, e, i, raan, argp)`.
pub type ElementVector = SVector<f64, 5>;

/// The five slow classical orbital elements of an elliptic orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElements {
    /// Semi-major axis, km.
    pub a: f64,
    /// Eccentricity, dimensionless.
    pub e: f64,
    /// Inclination, rad.
    pub i: f64,
    /// Right ascension of the ascending node, rad. Not wrapped.
    pub raan: f64,
    /// Argument of periapsis, rad. Not wrapped.
    pub argp: f64,
}

impl OrbitalElements {
    pub fn new(a: f64, e: f64, i: f64, raan: f64, argp: f64) -> Self {
        Self { a, e, i, raan, argp }
    }

    /// Checks the type invariants: `a > 0`, `0 <= e < 1`, `i` in `[0, pi]`,
    /// all fields finite. Returns the name of the first violated field.
    pub fn validate(&self) -> Result<(), &'static str> {
        if !self.a.is_finite() || self.a <= 0.0 {
            return Err("a");
        }
        if !self.e.is_finite() || !(0.0..1.0).contains(&self.e) {
            return Err("e");
        }
        if !self.i.is_finite() || !(0.0..=std::f64::consts::PI).contains(&self.i) {
            return Err("i");
        }
        if !self.raan.is_finite() {
            return Err("raan");
        }
        if !self.argp.is_finite() {
            return Err("argp");
        }
        Ok(())
    }

    /// Semi-latus rectum `p = a(1 - e^2)`, km.
    pub fn semi_latus_rectum(&self) -> f64 {
        self.a * (1.0 - self.e * self.e)
    }

    /// Periapsis radius `r_p = a(1 - e)`, km.
    pub fn periapsis_radius(&self) -> f64 {
        self.a * (1.0 - self.e)
    }

    /// Orbit radius `r = p / (1 + e cos(theta))` at the given true anomaly, km.
    pub fn radius(&self, theta: f64) -> f64 {
        self.semi_latus_rectum() / (1.0 + self.e * theta.cos())
    }

    /// Cosine of the eccentric anomaly, `cos(psi) = (1/e)(1 - r/a)`, clamped
    /// to `[-1, 1]` against round-off. Only the cosine ever enters the
    /// variational equations, so the quadrant of `psi` itself is irrelevant.
    pub fn cos_eccentric_anomaly(&self, theta: f64) -> Result<f64, DynamicsError> {
        if self.e < ECC_SINGULARITY_GUARD {
            return Err(DynamicsError::EccentricitySingularity { e: self.e });
        }
        let r = self.radius(theta);
        Ok(((1.0 - r / self.a) / self.e).clamp(-1.0, 1.0))
    }

    pub fn to_vector(&self) -> ElementVector {
        ElementVector::from([self.a, self.e, self.i, self.raan, self.argp])
    }

    pub fn from_vector(v: &ElementVector) -> Self {
        Self { a: v[0], e: v[1], i: v[2], raan: v[3], argp: v[4] }
    }
}

/// Simulation state: the five slow elements plus the unwrapped true anomaly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalState {
    pub elements: OrbitalElements,
    /// True anomaly, rad, unwrapped.
    pub theta: f64,
}

impl OrbitalState {
    pub fn new(elements: OrbitalElements, theta: f64) -> Self {
        Self { elements, theta }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn semi_latus_rectum_values() {
        let x = OrbitalElements::new(21378.0, 0.65, 0.3, 0.0, 0.0);
        assert_relative_eq!(x.semi_latus_rectum(), 12345.795, max_relative = 1e-12);

        let circ = OrbitalElements::new(6878.0, 0.0, 0.3, 0.0, 0.0);
        assert_eq!(circ.semi_latus_rectum(), 6878.0);

        let unit = OrbitalElements::new(1.0, 0.5, 0.0, 0.0, 0.0);
        assert_eq!(unit.semi_latus_rectum(), 0.75);
    }

    #[test]
    fn radius_at_apses() {
        let x = OrbitalElements::new(21378.0, 0.65, 0.3, 0.0, 0.0);
        assert_relative_eq!(x.radius(0.0), 21378.0 * 0.35, max_relative = 1e-12);
        assert_relative_eq!(
            x.radius(std::f64::consts::PI),
            21378.0 * 1.65,
            max_relative = 1e-12
        );
        let circ = OrbitalElements::new(6878.0, 0.0, 0.3, 0.0, 0.0);
        for theta in [0.0, 1.0, 2.5, 4.0] {
            assert_relative_eq!(circ.radius(theta), 6878.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn cos_eccentric_anomaly_at_apses_and_semi_latus() {
        let x = OrbitalElements::new(21378.0, 0.65, 0.3, 0.0, 0.0);
        assert_relative_eq!(x.cos_eccentric_anomaly(0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            x.cos_eccentric_anomaly(std::f64::consts::PI).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        // At r = p (theta = pi/2) the identity cos(psi) = e holds.
        assert_relative_eq!(
            x.cos_eccentric_anomaly(std::f64::consts::FRAC_PI_2).unwrap(),
            0.65,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cos_eccentric_anomaly_guards_circular() {
        let circ = OrbitalElements::new(6878.0, 0.0, 0.3, 0.0, 0.0);
        assert!(matches!(
            circ.cos_eccentric_anomaly(1.0),
            Err(DynamicsError::EccentricitySingularity { .. })
        ));
    }

    #[test]
    fn validate_rejects_bad_fields() {
        let mut x = OrbitalElements::new(7000.0, 0.1, 0.4, 0.0, 0.0);
        assert!(x.validate().is_ok());
        x.e = 1.0;
        assert_eq!(x.validate(), Err("e"));
        x.e = 0.1;
        x.a = -1.0;
        assert_eq!(x.validate(), Err("a"));
        x.a = 7000.0;
        x.i = 3.5;
        assert_eq!(x.validate(), Err("i"));
    }
}
