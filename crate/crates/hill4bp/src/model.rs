//! Hamiltonian, effective potential and equations of motion.

use crate::error::{Error, Result};
use crate::params::ParameterSet;
use crate::state::{PhaseState, SphericalPoint, R_MIN};
use nalgebra::{Matrix2, Vector2, Vector3};

fn guard_radius(r: f64) -> Result<()> {
    if r < R_MIN {
        return Err(Error::Singularity { r, r_min: R_MIN });
    }
    Ok(())
}

/// Rotating-frame Hamiltonian
/// `H = (px^2 + py^2 + pz^2)/2 + px y - py x - 1/r + a x^2 + b y^2 + z^2/2`.
pub fn hamiltonian(p: &ParameterSet, s: &PhaseState) -> Result<f64> {
    let r = s.radius();
    guard_radius(r)?;
    Ok(
        0.5 * (s.px * s.px + s.py * s.py + s.pz * s.pz) + s.px * s.y - s.py * s.x - 1.0 / r
            + p.a * s.x * s.x
            + p.b * s.y * s.y
            + 0.5 * s.z * s.z,
    )
}

/// The same energy written as shifted kinetic energy plus effective
/// potential: `H = ((px + y)^2 + (py - x)^2 + pz^2)/2 + U(x, y, z)`.
pub fn hamiltonian_rotating_form(p: &ParameterSet, s: &PhaseState) -> Result<f64> {
    let vx = s.px + s.y;
    let vy = s.py - s.x;
    Ok(0.5 * (vx * vx + vy * vy + s.pz * s.pz) + effective_potential(p, s.position())?)
}

/// Effective potential `U = -1/r - (lambda2 x^2 + lambda1 y^2 - z^2)/2`.
pub fn effective_potential(p: &ParameterSet, pos: Vector3<f64>) -> Result<f64> {
    let r = pos.norm();
    guard_radius(r)?;
    Ok(-1.0 / r - 0.5 * (p.lambda2 * pos.x * pos.x + p.lambda1 * pos.y * pos.y - pos.z * pos.z))
}

/// Angular factor `W(theta, phi)` such that
/// `U = -1/rho - rho^2 W / 2`; precomputed from trig pairs so the special
/// angles with exact zero sines/cosines stay exact.
#[inline]
pub(crate) fn angular_weight(
    p: &ParameterSet,
    sin_t: f64,
    cos_t: f64,
    sin_p: f64,
    cos_p: f64,
) -> f64 {
    let sp2 = sin_p * sin_p;
    p.lambda2 * cos_t * cos_t * sp2 + p.lambda1 * sin_t * sin_t * sp2 - cos_p * cos_p
}

/// Effective potential in spherical coordinates,
/// `U = -1/rho - rho^2 (lambda2 cos^2 t sin^2 f + lambda1 sin^2 t sin^2 f - cos^2 f)/2`.
pub fn effective_potential_spherical(p: &ParameterSet, sp: &SphericalPoint) -> Result<f64> {
    guard_radius(sp.rho)?;
    let (st, ct) = sp.theta.sin_cos();
    let (sf, cf) = sp.phi.sin_cos();
    Ok(-1.0 / sp.rho - 0.5 * sp.rho * sp.rho * angular_weight(p, st, ct, sf, cf))
}

/// `dU/drho = 1/rho^2 - rho W(theta, phi)`.
pub fn potential_radial_derivative(p: &ParameterSet, sp: &SphericalPoint) -> Result<f64> {
    guard_radius(sp.rho)?;
    let (st, ct) = sp.theta.sin_cos();
    let (sf, cf) = sp.phi.sin_cos();
    Ok(1.0 / (sp.rho * sp.rho) - sp.rho * angular_weight(p, st, ct, sf, cf))
}

/// `d2U/drho2 = -2/rho^3 - W(theta, phi)`.
pub fn potential_radial_second_derivative(p: &ParameterSet, sp: &SphericalPoint) -> Result<f64> {
    guard_radius(sp.rho)?;
    let (st, ct) = sp.theta.sin_cos();
    let (sf, cf) = sp.phi.sin_cos();
    Ok(-2.0 / (sp.rho * sp.rho * sp.rho) - angular_weight(p, st, ct, sf, cf))
}

/// Gradient of the effective potential in Cartesian coordinates.
pub fn potential_gradient(p: &ParameterSet, pos: Vector3<f64>) -> Result<Vector3<f64>> {
    let r = pos.norm();
    guard_radius(r)?;
    let r3 = r * r * r;
    Ok(Vector3::new(
        pos.x / r3 - p.lambda2 * pos.x,
        pos.y / r3 - p.lambda1 * pos.y,
        pos.z / r3 + pos.z,
    ))
}

/// Hessian of the planar restriction `U(x, y, 0)`; used by the Newton
/// oracle for the Lagrange points.
pub fn potential_hessian_planar(p: &ParameterSet, x: f64, y: f64) -> Result<Matrix2<f64>> {
    let r = (x * x + y * y).sqrt();
    guard_radius(r)?;
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    Ok(Matrix2::new(
        1.0 / r3 - 3.0 * x * x / r5 - p.lambda2,
        -3.0 * x * y / r5,
        -3.0 * x * y / r5,
        1.0 / r3 - 3.0 * y * y / r5 - p.lambda1,
    ))
}

/// Planar gradient of `U(x, y, 0)`.
pub fn potential_gradient_planar(p: &ParameterSet, x: f64, y: f64) -> Result<Vector2<f64>> {
    let g = potential_gradient(p, Vector3::new(x, y, 0.0))?;
    Ok(Vector2::new(g.x, g.y))
}

/// Hamiltonian vector field `(dx, dy, dz, dpx, dpy, dpz)/dt` of
/// [`hamiltonian`].
pub fn vector_field(p: &ParameterSet, s: &PhaseState) -> Result<[f64; 6]> {
    let r = s.radius();
    guard_radius(r)?;
    let r3 = r * r * r;
    Ok([
        s.px + s.y,
        s.py - s.x,
        s.pz,
        s.py - 2.0 * p.a * s.x - s.x / r3,
        -s.px - 2.0 * p.b * s.y - s.y / r3,
        -s.z - s.z / r3,
    ])
}

/// Gradient of [`hamiltonian`] with respect to all six phase-space
/// coordinates; the vector field is its symplectic rotation.
pub fn hamiltonian_gradient(p: &ParameterSet, s: &PhaseState) -> Result<[f64; 6]> {
    let r = s.radius();
    guard_radius(r)?;
    let r3 = r * r * r;
    Ok([
        -s.py + 2.0 * p.a * s.x + s.x / r3,
        s.px + 2.0 * p.b * s.y + s.y / r3,
        s.z + s.z / r3,
        s.px + s.y,
        s.py - s.x,
        s.pz,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_parameters;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> PhaseState {
        loop {
            let s = PhaseState::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let r = s.radius();
            if (0.05..10.0).contains(&r) {
                return s;
            }
        }
    }

    #[test]
    fn hand_evaluated_energy_mu_zero() {
        let p = derive_parameters(0.0).unwrap();
        let s = PhaseState::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0);
        // -1/0.5 + a * 0.25 = -2 - 0.25
        assert_relative_eq!(hamiltonian(&p, &s).unwrap(), -2.25, max_relative = 1e-15);
    }

    #[test]
    fn hand_evaluated_rotating_form_and_jacobi() {
        let p = derive_parameters(0.0).unwrap();
        let s = PhaseState::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        // kinetic part vanishes, U = -1 - lambda2/2 = -5/2
        let h = hamiltonian_rotating_form(&p, &s).unwrap();
        assert_relative_eq!(h, -2.5, max_relative = 1e-15);
        let jacobi = -2.0 * h;
        assert_relative_eq!(jacobi, 5.0, max_relative = 1e-15);
    }

    #[test]
    fn two_hamiltonian_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &mu in &[0.0, 0.00095, 0.2, 0.5] {
            let p = derive_parameters(mu).unwrap();
            for _ in 0..10_000 {
                let s = random_state(&mut rng);
                let h1 = hamiltonian(&p, &s).unwrap();
                let h2 = hamiltonian_rotating_form(&p, &s).unwrap();
                assert_relative_eq!(h1, h2, max_relative = 1e-13, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn spherical_potential_matches_cartesian() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = derive_parameters(0.2).unwrap();
        for _ in 0..10_000 {
            let sp = SphericalPoint::new(
                rng.gen_range(0.05..3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::PI),
            );
            let u_sph = effective_potential_spherical(&p, &sp).unwrap();
            let u_cart = effective_potential(&p, sp.to_cartesian()).unwrap();
            assert_relative_eq!(u_sph, u_cart, max_relative = 1e-13, epsilon = 1e-13);
        }
    }

    #[test]
    fn potential_at_collinear_radius_equals_first_critical_value() {
        // U(r, 0, pi/2) = -(3/2) lambda2^(1/3) with r = lambda2^(-1/3)
        let p = derive_parameters(0.2).unwrap();
        let r = p.lambda2.powf(-1.0 / 3.0);
        let u = effective_potential_spherical(
            &p,
            &SphericalPoint::new(r, 0.0, std::f64::consts::FRAC_PI_2),
        )
        .unwrap();
        assert_relative_eq!(u, -1.5 * p.lambda2.cbrt(), max_relative = 1e-14);
        // frozen extended-precision value at mu = 0.2
        assert_relative_eq!(u, -2.057743520532343, max_relative = 1e-14);
    }

    #[test]
    fn spherical_potential_pi_periodic() {
        use std::f64::consts::PI;
        let p = derive_parameters(0.3).unwrap();
        for i in 0..24 {
            for j in 1..12 {
                let theta = i as f64 * PI / 12.0;
                let phi = j as f64 * PI / 12.0;
                let u = |t, f| {
                    effective_potential_spherical(&p, &SphericalPoint::new(0.6, t, f)).unwrap()
                };
                assert_relative_eq!(u(theta, phi), u(theta + PI, phi), max_relative = 1e-13);
                assert_relative_eq!(u(theta, phi), u(theta, PI - phi), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn vector_field_is_symplectic_gradient() {
        // Central finite differences of H against the analytic field.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = derive_parameters(0.2).unwrap();
        let h = 1e-6;
        let mut max_rel: f64 = 0.0;
        for _ in 0..1000 {
            let s = random_state(&mut rng);
            let field = vector_field(&p, &s).unwrap();
            // dq/dt = dH/dp, dp/dt = -dH/dq
            let mut fd = [0.0; 6];
            for k in 0..6 {
                let mut up = s.to_array();
                let mut dn = s.to_array();
                up[k] += h;
                dn[k] -= h;
                let dh = (hamiltonian(&p, &PhaseState::from_array(up)).unwrap()
                    - hamiltonian(&p, &PhaseState::from_array(dn)).unwrap())
                    / (2.0 * h);
                if k < 3 {
                    fd[k + 3] = -dh;
                } else {
                    fd[k - 3] = dh;
                }
            }
            for k in 0..6 {
                let denom = field[k].abs().max(1.0);
                max_rel = max_rel.max((field[k] - fd[k]).abs() / denom);
            }
        }
        assert!(max_rel < 1e-6, "max relative error {max_rel}");
    }

    #[test]
    fn second_order_form_recovered() {
        // xdd - 2 yd = (lambda2 - 1/r^3) x etc., derived from the first-order field.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for &mu in &[0.0, 0.2, 0.5] {
            let p = derive_parameters(mu).unwrap();
            for _ in 0..200 {
                let s = random_state(&mut rng);
                let f = vector_field(&p, &s).unwrap();
                // second derivatives via d/dt of (xd, yd, zd) = (px + y, py - x, pz)
                let xdd = f[3] + f[1];
                let ydd = f[4] - f[0];
                let zdd = f[5];
                let r = s.radius();
                let r3 = r * r * r;
                assert_relative_eq!(
                    xdd - 2.0 * f[1],
                    (p.lambda2 - 1.0 / r3) * s.x,
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
                assert_relative_eq!(
                    ydd + 2.0 * f[0],
                    (p.lambda1 - 1.0 / r3) * s.y,
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
                assert_relative_eq!(
                    zdd,
                    -(1.0 + 1.0 / r3) * s.z,
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn z_axis_states_have_no_planar_drift() {
        let p = derive_parameters(0.2).unwrap();
        let s = PhaseState::new(0.0, 0.0, 0.7, 0.0, 0.0, -0.3);
        let f = vector_field(&p, &s).unwrap();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[3], 0.0);
        assert_eq!(f[4], 0.0);
    }

    #[test]
    fn singularity_guard() {
        let p = derive_parameters(0.2).unwrap();
        let s = PhaseState::new(0.0, 0.0, 0.0, 0.1, 0.0, 0.0);
        assert!(matches!(
            hamiltonian(&p, &s),
            Err(Error::Singularity { .. })
        ));
        assert!(effective_potential(&p, Vector3::zeros()).is_err());
        assert!(vector_field(&p, &s).is_err());
    }
}
