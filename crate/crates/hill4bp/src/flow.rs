//! Trajectory integration in the physical and the regularized chart,
//! conservation diagnostics, collision transit and symmetric-orbit
//! shooting.

use crate::error::{Error, Result};
use crate::model::{hamiltonian, vector_field};
use crate::ode::{solve_dopri5, SolveOptions};
use crate::params::ParameterSet;
use crate::regularization::{
    q_gradient, regularized_hamiltonian, sphere_to_stereo, stereo_to_sphere, switch_map,
    unswitch_map, RegularizedState,
};
use crate::state::PhaseState;
use crate::symmetry::{Involution, Kind};
use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

/// Physical integrations halt gracefully below this radius; the collision
/// itself is reachable only in the regularized chart.
pub const COLLISION_RADIUS: f64 = 1e-6;

/// Hard failure threshold for `|Q - 1/2|` in the regularized chart.
pub const Q_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    /// The trajectory entered the collision guard radius; the partial
    /// trajectory up to that point is returned.
    CollisionStop {
        t: f64,
        r: f64,
    },
}

/// Physical-chart trajectory with per-sample energies and the accumulated
/// time reparametrization `s(t) = integral dt / |X|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub energies: Vec<f64>,
    pub arc_params: Vec<f64>,
    pub max_energy_drift: f64,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last_state(&self) -> PhaseState {
        *self.states.last().expect("trajectory never empty")
    }

    /// CSV rendering with columns `t,x,y,z,px,py,pz,H`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,px,py,pz,H\n");
        for ((t, s), h) in self.times.iter().zip(&self.states).zip(&self.energies) {
            let a = s.to_array();
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                t, a[0], a[1], a[2], a[3], a[4], a[5], h
            ));
        }
        out
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::Domain(format!("tol = {tol} outside [1e-13, 1e-6]")));
    }
    Ok(())
}

fn physical_rhs(p: &ParameterSet) -> impl Fn(f64, &[f64; 7]) -> Result<[f64; 7]> + '_ {
    move |_t, y| {
        let s = PhaseState::from_array([y[0], y[1], y[2], y[3], y[4], y[5]]);
        let f = vector_field(p, &s)?;
        let r = s.radius();
        Ok([f[0], f[1], f[2], f[3], f[4], f[5], 1.0 / r])
    }
}

fn build_trajectory(
    p: &ParameterSet,
    times: Vec<f64>,
    raw: Vec<[f64; 7]>,
    stopped: bool,
) -> Result<Trajectory> {
    let states: Vec<PhaseState> = raw
        .iter()
        .map(|y| PhaseState::from_array([y[0], y[1], y[2], y[3], y[4], y[5]]))
        .collect();
    let energies: Vec<f64> = states
        .iter()
        .map(|s| hamiltonian(p, s))
        .collect::<Result<_>>()?;
    let h0 = energies.first().copied().unwrap_or(0.0);
    let max_energy_drift = energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
    let termination = if stopped {
        let (t, s) = (times.last().copied().unwrap_or(0.0), states.last().unwrap());
        Termination::CollisionStop { t, r: s.radius() }
    } else {
        Termination::Completed
    };
    Ok(Trajectory {
        arc_params: raw.iter().map(|y| y[6]).collect(),
        times,
        states,
        energies,
        max_energy_drift,
        termination,
    })
}

/// Integrates the rotating-frame equations of motion from `s0` to
/// `t_final` (either sign), recording every accepted step.
pub fn integrate_physical(
    p: &ParameterSet,
    s0: &PhaseState,
    t_final: f64,
    tol: f64,
) -> Result<Trajectory> {
    check_tol(tol)?;
    let y0 = augment(s0);
    let stop =
        |_t: f64, y: &[f64; 7]| (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() < COLLISION_RADIUS;
    let sol = solve_dopri5(
        physical_rhs(p),
        0.0,
        y0,
        t_final,
        tol,
        tol,
        SolveOptions {
            stop_when: Some(&stop),
            ..Default::default()
        },
    )?;
    build_trajectory(p, sol.times, sol.states, sol.stopped)
}

/// Same flow, recorded exactly at the requested times.
pub fn integrate_physical_at(
    p: &ParameterSet,
    s0: &PhaseState,
    t_eval: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    check_tol(tol)?;
    let y0 = augment(s0);
    let t_final = t_eval.last().copied().unwrap_or(0.0);
    let sol = solve_dopri5(
        physical_rhs(p),
        0.0,
        y0,
        t_final,
        tol,
        tol,
        SolveOptions {
            t_eval: Some(t_eval),
            ..Default::default()
        },
    )?;
    build_trajectory(p, sol.times, sol.states, sol.stopped)
}

fn augment(s: &PhaseState) -> [f64; 7] {
    let a = s.to_array();
    [a[0], a[1], a[2], a[3], a[4], a[5], 0.0]
}

/// Regularized-chart trajectory on (a neighborhood of) `Q = 1/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularizedTrajectory {
    pub arc: Vec<f64>,
    pub states: Vec<RegularizedState>,
    pub q_values: Vec<f64>,
    pub max_q_drift: f64,
}

impl RegularizedTrajectory {
    pub fn last_state(&self) -> RegularizedState {
        *self.states.last().expect("trajectory never empty")
    }

    /// CSV rendering with columns `s,xi0..xi3,eta0..eta3,Q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,xi0,xi1,xi2,xi3,eta0,eta1,eta2,eta3,Q\n");
        for ((s, r), q) in self.arc.iter().zip(&self.states).zip(&self.q_values) {
            let a = r.to_array();
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s, a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], q
            ));
        }
        out
    }
}

/// Hamiltonian vector field of `Q` on `T*S^3`, written in ambient R^8
/// coordinates with the tangency (Dirac) correction that keeps the flow on
/// the constraint manifold:
/// `xi' = Q_eta - beta xi`, `eta' = -Q_xi + alpha xi + beta eta` with
/// `beta = <xi, Q_eta>`, `alpha = <xi, Q_xi> - <eta, Q_eta>`.
fn regularized_rhs(p: &ParameterSet, c: f64) -> impl Fn(f64, &[f64; 8]) -> Result<[f64; 8]> + '_ {
    move |_s, y| {
        let r = RegularizedState {
            xi: [y[0], y[1], y[2], y[3]],
            eta: [y[4], y[5], y[6], y[7]],
        };
        let (dxi, deta) = q_gradient(p, c, &r);
        let xi = Vector4::from(r.xi);
        let eta = Vector4::from(r.eta);
        let q_xi = Vector4::from(dxi);
        let q_eta = Vector4::from(deta);
        let beta = xi.dot(&q_eta);
        let alpha = xi.dot(&q_xi) - eta.dot(&q_eta);
        let xdot = q_eta - beta * xi;
        let edot = -q_xi + alpha * xi + beta * eta;
        Ok([
            xdot[0], xdot[1], xdot[2], xdot[3], edot[0], edot[1], edot[2], edot[3],
        ])
    }
}

fn reg_projection(y: &mut [f64; 8]) {
    let r = RegularizedState::projected([y[0], y[1], y[2], y[3]], [y[4], y[5], y[6], y[7]]);
    y[..4].copy_from_slice(&r.xi);
    y[4..].copy_from_slice(&r.eta);
}

fn reg_solution_to_trajectory(
    p: &ParameterSet,
    c: f64,
    times: Vec<f64>,
    raw: Vec<[f64; 8]>,
) -> Result<RegularizedTrajectory> {
    let states: Vec<RegularizedState> = raw
        .iter()
        .map(|y| RegularizedState {
            xi: [y[0], y[1], y[2], y[3]],
            eta: [y[4], y[5], y[6], y[7]],
        })
        .collect();
    let q_values: Vec<f64> = states
        .iter()
        .map(|r| regularized_hamiltonian(p, c, r))
        .collect();
    let mut max_q_drift = 0.0f64;
    for (q, s) in q_values.iter().zip(&times) {
        let drift = (q - 0.5).abs();
        if drift > Q_DRIFT_LIMIT {
            return Err(Error::Drift {
                drift,
                limit: Q_DRIFT_LIMIT,
                s: *s,
            });
        }
        max_q_drift = max_q_drift.max(drift);
    }
    Ok(RegularizedTrajectory {
        arc: times,
        states,
        q_values,
        max_q_drift,
    })
}

/// Integrates the regularized flow from `r0` (which must satisfy
/// `Q = 1/2` to 1e-10) over the new time parameter `s`, re-projecting the
/// constraints each accepted step. Collision transits (the North pole
/// fiber) are regular points of this flow.
pub fn integrate_regularized(
    p: &ParameterSet,
    c: f64,
    r0: &RegularizedState,
    s_final: f64,
    tol: f64,
) -> Result<RegularizedTrajectory> {
    check_tol(tol)?;
    check_on_level(p, c, r0)?;
    let sol = solve_dopri5(
        regularized_rhs(p, c),
        0.0,
        r0.to_array(),
        s_final,
        tol,
        tol,
        SolveOptions {
            projection: Some(&reg_projection),
            ..Default::default()
        },
    )?;
    reg_solution_to_trajectory(p, c, sol.times, sol.states)
}

/// Same flow, recorded exactly at the requested arc parameters.
pub fn integrate_regularized_at(
    p: &ParameterSet,
    c: f64,
    r0: &RegularizedState,
    s_eval: &[f64],
    tol: f64,
) -> Result<RegularizedTrajectory> {
    check_tol(tol)?;
    check_on_level(p, c, r0)?;
    let s_final = s_eval.last().copied().unwrap_or(0.0);
    let sol = solve_dopri5(
        regularized_rhs(p, c),
        0.0,
        r0.to_array(),
        s_final,
        tol,
        tol,
        SolveOptions {
            t_eval: Some(s_eval),
            projection: Some(&reg_projection),
            ..Default::default()
        },
    )?;
    reg_solution_to_trajectory(p, c, sol.times, sol.states)
}

fn check_on_level(p: &ParameterSet, c: f64, r0: &RegularizedState) -> Result<()> {
    let q = regularized_hamiltonian(p, c, r0);
    if (q - 0.5).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "initial state off the level set: Q - 1/2 = {:+.3e}",
            q - 0.5
        )));
    }
    Ok(())
}

/// Closest approach of a regularized trajectory to the North pole fiber:
/// returns `(s*, min(1 - xi0))` over `s in [0, s_final]`, refined by
/// golden-section search between accepted steps.
pub fn closest_pole_approach(
    p: &ParameterSet,
    c: f64,
    r0: &RegularizedState,
    s_final: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let traj = integrate_regularized(p, c, r0, s_final, tol)?;
    let u = |r: &RegularizedState| 1.0 - r.xi[0];
    let (imin, _) = traj
        .states
        .iter()
        .enumerate()
        .min_by(|a, b| u(a.1).partial_cmp(&u(b.1)).expect("finite"))
        .expect("non-empty trajectory");
    let lo_i = imin.saturating_sub(1);
    let hi_i = (imin + 1).min(traj.states.len() - 1);
    let base = traj.states[lo_i];
    let (mut a, mut b) = (0.0, (traj.arc[hi_i] - traj.arc[lo_i]).max(1e-12));
    let eval = |ds: f64| -> Result<f64> {
        if ds <= 1e-13 {
            return Ok(u(&base));
        }
        let t = integrate_regularized_at(p, c, &base, &[ds], tol)?;
        Ok(u(&t.last_state()))
    };
    let phi = 0.5 * (5.0f64.sqrt() - 1.0); // golden section constant
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    for _ in 0..50 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2)?;
        }
    }
    let ds = 0.5 * (a + b);
    let best = eval(ds)?.min(u(&base)).min(f1).min(f2);
    Ok((traj.arc[lo_i] + ds, best))
}

/// Maximum position discrepancy between the physical flow and the
/// unswitched stereographic image of the regularized flow, compared at
/// matched arc parameters `s(t) = integral dt/|X|` over `n_checks`
/// uniformly spaced times.
pub fn physical_regularized_match(
    p: &ParameterSet,
    c: f64,
    s0: &PhaseState,
    t_final: f64,
    n_checks: usize,
    tol: f64,
) -> Result<f64> {
    let t_grid: Vec<f64> = (0..=n_checks)
        .map(|i| t_final * i as f64 / n_checks as f64)
        .collect();
    let phys = integrate_physical_at(p, s0, &t_grid, tol)?;
    let r0 = stereo_to_sphere(&switch_map(s0));
    let reg = integrate_regularized_at(p, c, &r0, &phys.arc_params, tol)?;
    let mut max_err = 0.0f64;
    for (ps, rs) in phys.states.iter().zip(&reg.states) {
        let back = unswitch_map(&sphere_to_stereo(rs)?);
        let err = (ps.position() - back.position()).norm();
        max_err = max_err.max(err);
    }
    Ok(max_err)
}

/// A symmetric periodic orbit found by shooting against a reversor's
/// fixed set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub initial: PhaseState,
    pub period: f64,
    /// Transverse momentum at the half-period return (the shooting
    /// residual).
    pub residual: f64,
    pub iterations: usize,
}

/// Newton (secant) shooting for a planar orbit symmetric under the given
/// anti-symplectic reversor (`rho_x` or `rho_y` restricted from rho1..4):
/// the orbit starts on `Fix(reversor)` inside the energy level `H = c` and
/// must return to it perpendicularly after half a period.
///
/// `guess` is the starting section coordinate (x for `rho_x`, y for
/// `rho_y`); the retrograde momentum branch of the energy constraint is
/// used.
pub fn symmetric_shooting(
    p: &ParameterSet,
    c: f64,
    reversor: &Involution,
    guess: f64,
    tol: f64,
) -> Result<PeriodicOrbit> {
    check_tol(tol)?;
    if reversor.kind != Kind::AntiSymplectic {
        return Err(Error::Domain(format!(
            "{}: shooting needs an anti-symplectic reversor",
            reversor.name
        )));
    }
    let planar = crate::symmetry::restrict_to_planar(reversor)?;
    let on_x_axis = match planar.name.as_str() {
        "rho_x" => true,
        "rho_y" => false,
        other => {
            return Err(Error::Domain(format!(
                "{other}: fixed set does not seed planar shooting"
            )))
        }
    };

    // retrograde-branch initial state on Fix(reversor) at energy c
    let section_state = |q: f64| -> Result<PhaseState> {
        if on_x_axis {
            // (x, 0, 0, 0, py, 0): H = py^2/2 - py x - 1/|x| + a x^2
            let disc = p.lambda2 * q * q + 2.0 / q.abs() + 2.0 * c;
            if disc < 0.0 {
                return Err(Error::Domain(format!("x = {q} is outside the Hill region")));
            }
            Ok(PhaseState::new(q, 0.0, 0.0, 0.0, q - disc.sqrt(), 0.0))
        } else {
            // (0, y, 0, px, 0, 0): H = px^2/2 + px y - 1/|y| + b y^2
            let disc = (1.0 - 2.0 * p.b) * q * q + 2.0 / q.abs() + 2.0 * c;
            if disc < 0.0 {
                return Err(Error::Domain(format!("y = {q} is outside the Hill region")));
            }
            Ok(PhaseState::new(0.0, q, 0.0, -q + disc.sqrt(), 0.0, 0.0))
        }
    };

    // residual at first return to the section
    let return_residual = |q: f64| -> Result<(f64, f64)> {
        let s0 = section_state(q)?;
        let t_budget = 4.0 * std::f64::consts::TAU;
        let traj = integrate_physical(p, &s0, t_budget, tol)?;
        if traj.termination != Termination::Completed {
            return Err(Error::Domain(
                "shooting trajectory hit the collision guard".into(),
            ));
        }
        let coord = |s: &PhaseState| if on_x_axis { s.y } else { s.x };
        let transverse = |s: &PhaseState| if on_x_axis { s.px } else { s.py };
        // first sign change of the section coordinate after leaving it
        let mut bracket = None;
        let mut seen_sign = 0.0f64;
        for (i, s) in traj.states.iter().enumerate().skip(1) {
            let v = coord(s);
            if seen_sign == 0.0 {
                if v != 0.0 {
                    seen_sign = v.signum();
                }
                continue;
            }
            if v.signum() != seen_sign {
                bracket = Some(i - 1);
                break;
            }
        }
        let Some(i) = bracket else {
            return Err(Error::NonConvergence {
                iterations: 0,
                residual: f64::NAN,
            });
        };
        // bisect the crossing time within [t_i, t_{i+1}]
        let base = traj.states[i];
        let (mut lo, mut hi) = (0.0, traj.times[i + 1] - traj.times[i]);
        let eval = |dt: f64| -> Result<PhaseState> {
            if dt <= 1e-13 {
                return Ok(base);
            }
            Ok(integrate_physical_at(p, &base, &[dt], tol)?.last_state())
        };
        let sign_lo = coord(&base).signum();
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if coord(&eval(mid)?).signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let dt = 0.5 * (lo + hi);
        let s_cross = eval(dt)?;
        Ok((transverse(&s_cross), traj.times[i] + dt))
    };

    // secant iteration on the transverse momentum at return
    let mut q0 = guess;
    let (mut f0, mut t_half) = return_residual(q0)?;
    if f0.abs() < 1e-9 {
        return Ok(PeriodicOrbit {
            initial: section_state(q0)?,
            period: 2.0 * t_half,
            residual: f0.abs(),
            iterations: 0,
        });
    }
    let mut q1 = q0 * (1.0 + 1e-4);
    let (mut f1, _) = return_residual(q1)?;
    for iter in 1..=30 {
        if (f1 - f0).abs() < 1e-15 {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: f1.abs(),
            });
        }
        let q2 = q1 - f1 * (q1 - q0) / (f1 - f0);
        let (f2, t2) = return_residual(q2)?;
        q0 = q1;
        f0 = f1;
        q1 = q2;
        f1 = f2;
        t_half = t2;
        if f1.abs() < 1e-9 {
            return Ok(PeriodicOrbit {
                initial: section_state(q1)?,
                period: 2.0 * t_half,
                residual: f1.abs(),
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: 30,
        residual: f1.abs(),
    })
}
