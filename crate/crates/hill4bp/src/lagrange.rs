//! Lagrange points, lifted critical points and critical energy values.

use crate::error::{Error, Result};
use crate::model::{potential_gradient_planar, potential_hessian_planar};
use crate::params::ParameterSet;
use crate::state::PhaseState;
use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The four closed-form Lagrange points:
/// `L1/L2 = (+-lambda2^(-1/3), 0, 0)` and `L3/L4 = (0, +-lambda1^(-1/3), 0)`.
///
/// At `mu = 0` only `L1/L2` exist (`lambda1 = 0` sends `L3/L4` to
/// infinity) and the call fails with [`Error::Degenerate`]; use
/// [`collinear_points`] there.
pub fn lagrange_points(p: &ParameterSet) -> Result<[Vector3<f64>; 4]> {
    let [l1, l2] = collinear_points(p);
    if p.lambda1 <= 0.0 {
        return Err(Error::Degenerate(
            "lambda1 = 0 at mu = 0: L3/L4 are at infinity".into(),
        ));
    }
    let ry = p.lambda1.powf(-1.0 / 3.0);
    Ok([
        l1,
        l2,
        Vector3::new(0.0, ry, 0.0),
        Vector3::new(0.0, -ry, 0.0),
    ])
}

/// `L1/L2` only; well defined for every `mu` in `[0, 1/2]`.
pub fn collinear_points(p: &ParameterSet) -> [Vector3<f64>; 2] {
    let rx = p.lambda2.powf(-1.0 / 3.0);
    [Vector3::new(rx, 0.0, 0.0), Vector3::new(-rx, 0.0, 0.0)]
}

/// Lifts a critical point of the effective potential to the phase-space
/// critical point `(x, y, 0, -y, x, 0)` of the Hamiltonian.
pub fn lift_to_phase(pos: Vector3<f64>) -> Result<PhaseState> {
    if pos.z != 0.0 {
        return Err(Error::Domain(format!(
            "critical points lie in the ecliptic; got z = {}",
            pos.z
        )));
    }
    Ok(PhaseState::new(pos.x, pos.y, 0.0, -pos.y, pos.x, 0.0))
}

/// Critical energy values `(H(L1/2), H(L3/4))`:
/// `h12 = -(3/2) lambda2^(1/3)` and, for `mu > 0`,
/// `h34 = -(3/2) lambda1^(1/3) > h12`.
pub fn critical_values(p: &ParameterSet) -> (f64, Option<f64>) {
    let h12 = -1.5 * p.lambda2.cbrt();
    let h34 = (p.lambda1 > 0.0).then(|| -1.5 * p.lambda1.cbrt());
    (h12, h34)
}

/// Outcome of the Newton search from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeedOutcome {
    Converged { x: f64, y: f64, iterations: usize },
    NonConvergence { residual: f64 },
    LeftDomain,
}

/// Result of the seeded Newton search for critical points of `U` in the
/// ecliptic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPointSearch {
    /// Distinct converged critical points, sorted by `(x, y)`.
    pub points: Vec<[f64; 2]>,
    pub n_seeds: usize,
    pub n_converged: usize,
    pub n_failed: usize,
}

/// Independent oracle for [`lagrange_points`]: damped Newton iteration on
/// `grad U = 0` (planar, analytic Hessian) from every grid seed, merging
/// converged points that coincide to 1e-6.
///
/// Seeds that leave the search domain or fail to converge within 50
/// iterations are counted, not fatal.
pub fn find_critical_points_numeric(
    p: &ParameterSet,
    seeds: &[Vector2<f64>],
) -> CriticalPointSearch {
    let outcomes: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|seed| newton_from_seed(p, *seed))
        .collect();

    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut n_converged = 0;
    let mut n_failed = 0;
    for o in &outcomes {
        match o {
            SeedOutcome::Converged { x, y, .. } => {
                n_converged += 1;
                if !points.iter().any(|q| (q[0] - x).hypot(q[1] - y) < 1e-6) {
                    points.push([*x, *y]);
                }
            }
            _ => n_failed += 1,
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    CriticalPointSearch {
        points,
        n_seeds: seeds.len(),
        n_converged,
        n_failed,
    }
}

/// Regular 40x40-style seed grid over `[lo, hi]^2` with a hole of radius
/// `r_hole` around the origin.
pub fn seed_grid(lo: f64, hi: f64, n: usize, r_hole: f64) -> Vec<Vector2<f64>> {
    let mut seeds = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            let y = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
            if x.hypot(y) > r_hole {
                seeds.push(Vector2::new(x, y));
            }
        }
    }
    seeds
}

fn newton_from_seed(p: &ParameterSet, seed: Vector2<f64>) -> SeedOutcome {
    let mut q = seed;
    let mut g = match potential_gradient_planar(p, q.x, q.y) {
        Ok(g) => g,
        Err(_) => return SeedOutcome::LeftDomain,
    };
    for iter in 0..50 {
        if g.norm() < 1e-12 {
            return SeedOutcome::Converged {
                x: q.x,
                y: q.y,
                iterations: iter,
            };
        }
        let hess = match potential_hessian_planar(p, q.x, q.y) {
            Ok(h) => h,
            Err(_) => return SeedOutcome::LeftDomain,
        };
        let Some(inv) = hess.try_inverse() else {
            return SeedOutcome::NonConvergence { residual: g.norm() };
        };
        let mut step = -(inv * g);
        // damp while the residual grows
        let mut accepted = false;
        for _ in 0..20 {
            let trial = q + step;
            if trial.norm() < 0.01 || trial.norm() > 10.0 || !trial.x.is_finite() {
                step *= 0.5;
                continue;
            }
            match potential_gradient_planar(p, trial.x, trial.y) {
                Ok(tg) if tg.norm() <= g.norm() || step.norm() < 1e-14 => {
                    q = trial;
                    g = tg;
                    accepted = true;
                    break;
                }
                Ok(_) => step *= 0.5,
                Err(_) => step *= 0.5,
            }
        }
        if !accepted {
            return SeedOutcome::NonConvergence { residual: g.norm() };
        }
    }
    if g.norm() < 1e-10 {
        SeedOutcome::Converged {
            x: q.x,
            y: q.y,
            iterations: 50,
        }
    } else {
        SeedOutcome::NonConvergence { residual: g.norm() }
    }
}
