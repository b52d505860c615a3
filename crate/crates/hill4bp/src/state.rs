//! Phase-space and configuration-space value types.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Minimum radius below which the unregularized model raises
/// [`Error::Singularity`](crate::Error::Singularity). Collision itself is
/// handled in the regularized chart.
pub const R_MIN: f64 = 1e-12;

/// A point of the six-dimensional rotating-frame phase space.
///
/// Positions are in Hill-scaled units; momenta are conjugate in the same
/// unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, z: f64, px: f64, py: f64, pz: f64) -> Self {
        Self {
            x,
            y,
            z,
            px,
            py,
            pz,
        }
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.z, self.px, self.py, self.pz]
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn momentum(&self) -> Vector3<f64> {
        Vector3::new(self.px, self.py, self.pz)
    }

    pub fn from_parts(pos: Vector3<f64>, mom: Vector3<f64>) -> Self {
        Self::new(pos.x, pos.y, pos.z, mom.x, mom.y, mom.z)
    }

    /// Distance of the position from the origin.
    pub fn radius(&self) -> f64 {
        self.position().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Configuration-space point in spherical coordinates.
///
/// `x = rho cos(theta) sin(phi)`, `y = rho sin(theta) sin(phi)`,
/// `z = rho cos(phi)` with `theta` in `[0, 2 pi)` and `phi` in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub rho: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn new(rho: f64, theta: f64, phi: f64) -> Self {
        Self { rho, theta, phi }
    }

    pub fn to_cartesian(self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(self.rho * ct * sp, self.rho * st * sp, self.rho * cp)
    }

    /// Spherical coordinates of a Cartesian point. On the z-axis `theta`
    /// is set to 0.
    pub fn from_cartesian(v: Vector3<f64>) -> Self {
        let rho = v.norm();
        let phi = if rho > 0.0 {
            (v.z / rho).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        let mut theta = v.y.atan2(v.x);
        if theta < 0.0 {
            theta += 2.0 * std::f64::consts::PI;
        }
        Self { rho, theta, phi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spherical_round_trip() {
        let p = SphericalPoint::new(0.7, 1.3, 2.1);
        let q = SphericalPoint::from_cartesian(p.to_cartesian());
        assert_relative_eq!(p.rho, q.rho, max_relative = 1e-14);
        assert_relative_eq!(p.theta, q.theta, max_relative = 1e-14);
        assert_relative_eq!(p.phi, q.phi, max_relative = 1e-14);
    }

    #[test]
    fn cartesian_round_trip_on_axis() {
        // theta is arbitrary on the z-axis but the round trip must still
        // reproduce the Cartesian point.
        let v = Vector3::new(0.0, 0.0, -0.4);
        let back = SphericalPoint::from_cartesian(v).to_cartesian();
        assert_relative_eq!(v.z, back.z, max_relative = 1e-14);
        assert!(back.x.abs() < 1e-16 && back.y.abs() < 1e-16);
    }
}
