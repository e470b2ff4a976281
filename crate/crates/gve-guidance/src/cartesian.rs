//! Conversion between classical elements and inertial Cartesian state.
//!
//! Used for trajectory output and as the independent route in the
//! dynamics consistency checks.

use nalgebra::Vector3;

use crate::dynamics::BodyParams;
use crate::elements::OrbitalElements;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Inertial position/velocity, km and km/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl CartesianState {
    /// Specific angular momentum vector `r x v`, km^2/s.
    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }

    /// Specific orbital energy `v^2/2 - mu/r`, km^2/s^2.
    pub fn specific_energy(&self, body: &BodyParams) -> f64 {
        self.velocity.norm_squared() / 2.0 - body.mu / self.position.norm()
    }

    /// Radial / transverse / orbit-normal unit vectors at this state.
    pub fn stw_axes(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let e_r = self.position.normalize();
        let e_h = self.angular_momentum().normalize();
        let e_t = e_h.cross(&e_r);
        (e_r, e_t, e_h)
    }
}

/// Standard Keplerian element -> state conversion.
pub fn elements_to_cartesian(
    x: &OrbitalElements,
    theta: f64,
    body: &BodyParams,
) -> CartesianState {
    let p = x.semi_latus_rectum();
    let r = x.radius(theta);
    let (sin_th, cos_th) = theta.sin_cos();
    let r_pqw = Vector3::new(r * cos_th, r * sin_th, 0.0);
    let v_coef = (body.mu / p).sqrt();
    let v_pqw = Vector3::new(-v_coef * sin_th, v_coef * (x.e + cos_th), 0.0);

    let (sin_o, cos_o) = x.raan.sin_cos();
    let (sin_i, cos_i) = x.i.sin_cos();
    let (sin_w, cos_w) = x.argp.sin_cos();

    // PQW -> inertial rotation, columns of R3(-raan) R1(-i) R3(-argp).
    let px = Vector3::new(
        cos_o * cos_w - sin_o * sin_w * cos_i,
        sin_o * cos_w + cos_o * sin_w * cos_i,
        sin_w * sin_i,
    );
    let qx = Vector3::new(
        -cos_o * sin_w - sin_o * cos_w * cos_i,
        -sin_o * sin_w + cos_o * cos_w * cos_i,
        cos_w * sin_i,
    );

    CartesianState {
        position: px * r_pqw.x + qx * r_pqw.y,
        velocity: px * v_pqw.x + qx * v_pqw.y,
    }
}

/// Inverse conversion; angles are reduced to `[0, 2 pi)`.
///
/// Valid for elliptic, non-circular, non-equatorial states; the degenerate
/// directions are excluded by the element invariants used throughout.
pub fn cartesian_to_elements(state: &CartesianState, body: &BodyParams) -> (OrbitalElements, f64) {
    let r_vec = state.position;
    let v_vec = state.velocity;
    let r = r_vec.norm();

    let h_vec = r_vec.cross(&v_vec);
    let h_hat = h_vec.normalize();
    let n_vec = Vector3::new(-h_vec.y, h_vec.x, 0.0); // z_hat x h

    let e_vec = (r_vec * (v_vec.norm_squared() - body.mu / r) - v_vec * r_vec.dot(&v_vec))
        / body.mu;

    let energy = v_vec.norm_squared() / 2.0 - body.mu / r;
    let a = -body.mu / (2.0 * energy);
    let e = e_vec.norm();

    let i = (h_vec.x * h_vec.x + h_vec.y * h_vec.y).sqrt().atan2(h_vec.z);
    let raan = wrap_two_pi(n_vec.y.atan2(n_vec.x));
    let argp = wrap_two_pi(n_vec.cross(&e_vec).dot(&h_hat).atan2(n_vec.dot(&e_vec)));
    let theta = wrap_two_pi(e_vec.cross(&r_vec).dot(&h_hat).atan2(e_vec.dot(&r_vec)));

    (OrbitalElements::new(a, e, i, raan, argp), theta)
}

fn wrap_two_pi(angle: f64) -> f64 {
    let mut a = angle % TWO_PI;
    if a < 0.0 {
        a += TWO_PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EARTH: BodyParams = BodyParams::EARTH;

    #[test]
    fn circular_equatorial_reference_state() {
        let x = OrbitalElements::new(7000.0, 0.0, 0.0, 0.0, 0.0);
        let cart = elements_to_cartesian(&x, 0.0, &EARTH);
        assert_relative_eq!(cart.position.x, 7000.0, max_relative = 1e-14);
        assert!(cart.position.y.abs() < 1e-10 && cart.position.z.abs() < 1e-10);
        assert!(cart.velocity.x.abs() < 1e-12);
        assert_relative_eq!(cart.velocity.y, (EARTH.mu / 7000.0).sqrt(), max_relative = 1e-14);
    }

    fn random_elements(rng: &mut impl Rng) -> (OrbitalElements, f64) {
        let x = OrbitalElements::new(
            rng.gen_range(6800.0..40000.0),
            rng.gen_range(1e-3..0.95),
            rng.gen_range(1e-3..std::f64::consts::PI - 1e-3),
            rng.gen_range(0.0..2.0 * std::f64::consts::PI),
            rng.gen_range(0.0..2.0 * std::f64::consts::PI),
        );
        let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        (x, theta)
    }

    #[test]
    fn position_norm_equals_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (x, theta) = random_elements(&mut rng);
            let cart = elements_to_cartesian(&x, theta, &EARTH);
            assert_relative_eq!(cart.position.norm(), x.radius(theta), max_relative = 1e-12);
        }
    }

    #[test]
    fn vis_viva_energy_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let (x, theta) = random_elements(&mut rng);
            let cart = elements_to_cartesian(&x, theta, &EARTH);
            assert_relative_eq!(
                cart.specific_energy(&EARTH),
                -EARTH.mu / (2.0 * x.a),
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn round_trip_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let (x, theta) = random_elements(&mut rng);
            let cart = elements_to_cartesian(&x, theta, &EARTH);
            let (back, theta_back) = cartesian_to_elements(&cart, &EARTH);
            assert_relative_eq!(back.a, x.a, max_relative = 1e-9);
            assert_relative_eq!(back.e, x.e, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(back.i, x.i, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(back.raan, x.raan, max_relative = 1e-9, epsilon = 1e-11);
            assert_relative_eq!(back.argp, x.argp, max_relative = 1e-9, epsilon = 1e-11);
            assert_relative_eq!(theta_back, theta, max_relative = 1e-9, epsilon = 1e-11);
        }
    }
}
