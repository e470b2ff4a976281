//! Trajectory constraints: periapsis radius, thrust magnitude, and minimum
//! eccentricity, expressed as signed slacks (non-negative means satisfied).

use serde::Deserialize;

use crate::dynamics::ControlAccel;
use crate::elements::OrbitalElements;

/// Constraint bounds and barrier safety margins.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    /// Minimum periapsis radius, km.
    pub r_min: f64,
    /// Minimum eccentricity, dimensionless.
    pub e_min: f64,
    /// Maximum thrust acceleration magnitude, km/s^2.
    pub u_max: f64,
    /// Periapsis safety margin, km. Strictly positive.
    pub eps1: f64,
    /// Eccentricity safety margin, dimensionless. Strictly positive.
    pub eps2: f64,
}

impl ConstraintConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !self.r_min.is_finite() || self.r_min <= 0.0 {
            return Err("r_min");
        }
        if !self.e_min.is_finite() || self.e_min < 0.0 {
            return Err("e_min");
        }
        if !self.u_max.is_finite() || self.u_max <= 0.0 {
            return Err("u_max");
        }
        if !self.eps1.is_finite() || self.eps1 <= 0.0 {
            return Err("eps1");
        }
        if !self.eps2.is_finite() || self.eps2 <= 0.0 {
            return Err("eps2");
        }
        Ok(())
    }
}

/// Signed periapsis slack `c1 = a(1-e) - r_min`, km.
pub fn periapsis_slack(x: &OrbitalElements, cfg: &ConstraintConfig) -> f64 {
    x.periapsis_radius() - cfg.r_min
}

/// Signed eccentricity slack `c3 = e - e_min`, dimensionless.
pub fn eccentricity_slack(x: &OrbitalElements, cfg: &ConstraintConfig) -> f64 {
    x.e - cfg.e_min
}

/// Signed thrust slack `c2 = u_max^2 - |u|^2`, km^2/s^4.
pub fn thrust_slack(u: &ControlAccel, cfg: &ConstraintConfig) -> f64 {
    cfg.u_max * cfg.u_max - u.norm_squared()
}

/// True iff the state constraints hold, boundary included.
pub fn instantaneously_feasible(x: &OrbitalElements, cfg: &ConstraintConfig) -> bool {
    periapsis_slack(x, cfg) >= 0.0 && eccentricity_slack(x, cfg) >= 0.0
}
