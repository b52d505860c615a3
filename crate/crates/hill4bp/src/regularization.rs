//! Moser regularization: position/momentum switch, stereographic chart on
//! the cotangent bundle of the 3-sphere, the squared-and-shifted
//! Hamiltonian `Q`, and the near-collision transversality scan.
//!
//! The pipeline compactifies the bounded energy component: `H = c` is
//! rescaled to `K_c = |X|(H - c) = 0`, the switch `(X, P) -> (-P, X)`
//! makes the original momenta the new positions, and stereographic
//! projection carries the switched chart to `T*S^3`, where the level set
//! becomes `Q = 1/2` with `Q = |eta|^2 f^2 / 2` smooth through the
//! collision states (the fiber over the North pole `xi = (1,0,0,0)`).

use crate::error::{Error, Result};
use crate::lagrange::critical_values;
use crate::model::hamiltonian;
use crate::params::ParameterSet;
use crate::report::{run_scan_batches, ArgminKind, MinWitness, ScanReport, Verdict};
use crate::state::PhaseState;
use nalgebra::Vector4;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Point of `T*S^3`: `xi` on the unit sphere in R^4 and `eta` tangent at
/// `xi` (`<xi, eta> = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedState {
    pub xi: [f64; 4],
    pub eta: [f64; 4],
}

impl RegularizedState {
    /// Builds the state and re-projects onto the constraint manifold
    /// (`|xi| = 1`, `eta` orthogonal to `xi`), absorbing floating drift.
    pub fn projected(xi: [f64; 4], eta: [f64; 4]) -> Self {
        let mut xiv = Vector4::from(xi);
        xiv /= xiv.norm();
        let mut etav = Vector4::from(eta);
        etav -= xiv.dot(&etav) * xiv;
        Self {
            xi: xiv.into(),
            eta: etav.into(),
        }
    }

    pub fn xi_v(&self) -> Vector4<f64> {
        Vector4::from(self.xi)
    }

    pub fn eta_v(&self) -> Vector4<f64> {
        Vector4::from(self.eta)
    }

    pub fn eta_norm(&self) -> f64 {
        self.eta_v().norm()
    }

    /// Max violation of the two constraints.
    pub fn constraint_residual(&self) -> f64 {
        let xi = self.xi_v();
        ((xi.norm() - 1.0).abs()).max(xi.dot(&self.eta_v()).abs())
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.xi[0],
            self.xi[1],
            self.xi[2],
            self.xi[3],
            self.eta[0],
            self.eta[1],
            self.eta[2],
            self.eta[3],
        ]
    }
}

/// Interchanges the roles of position and momenta: `(X, P) -> (-P, X)`.
/// Symplectic; applying it twice gives `-id`.
pub fn switch_map(s: &PhaseState) -> PhaseState {
    PhaseState::new(-s.px, -s.py, -s.pz, s.x, s.y, s.z)
}

/// Inverse of [`switch_map`]: `(X, P) -> (P, -X)`.
pub fn unswitch_map(s: &PhaseState) -> PhaseState {
    PhaseState::new(s.px, s.py, s.pz, -s.x, -s.y, -s.z)
}

/// Time-rescaled shifted energy `K_c = |X| (H - c)`; zero exactly on the
/// level set `H = c`, where its flow reparametrizes the physical flow by
/// `ds = dt / |X|`.
pub fn time_rescaled_energy(p: &ParameterSet, c: f64, s: &PhaseState) -> Result<f64> {
    Ok(s.radius() * (hamiltonian(p, s)? - c))
}

/// Stereographic chart: maps a switched-coordinates point of `T*R^3` to
/// `T*S^3`. The output satisfies the constraint invariants by
/// construction (and is re-projected against rounding).
pub fn stereo_to_sphere(switched: &PhaseState) -> RegularizedState {
    let x2 = switched.x * switched.x + switched.y * switched.y + switched.z * switched.z;
    let denom = x2 + 1.0;
    let xp = switched.x * switched.px + switched.y * switched.py + switched.z * switched.pz;
    let xi = [
        (x2 - 1.0) / denom,
        2.0 * switched.x / denom,
        2.0 * switched.y / denom,
        2.0 * switched.z / denom,
    ];
    let half = 0.5 * denom;
    let eta = [
        xp,
        half * switched.px - xp * switched.x,
        half * switched.py - xp * switched.y,
        half * switched.pz - xp * switched.z,
    ];
    RegularizedState::projected(xi, eta)
}

/// Inverse stereographic chart back to switched coordinates; fails on the
/// North pole fiber where the switched position is infinite.
pub fn sphere_to_stereo(r: &RegularizedState) -> Result<PhaseState> {
    let u = 1.0 - r.xi[0];
    if u < 1e-14 {
        return Err(Error::NorthPole { one_minus_xi0: u });
    }
    let x = r.xi[1] / u;
    let y = r.xi[2] / u;
    let z = r.xi[3] / u;
    let g = momentum_components(r);
    Ok(PhaseState::new(x, y, z, g[0], g[1], g[2]))
}

/// The original momentum components expressed in the regularized chart:
/// `g_k = eta_k (1 - xi0) + xi_k eta0`.
pub fn momentum_components(r: &RegularizedState) -> [f64; 3] {
    let u = 1.0 - r.xi[0];
    [
        r.eta[1] * u + r.xi[1] * r.eta[0],
        r.eta[2] * u + r.xi[2] * r.eta[0],
        r.eta[3] * u + r.xi[3] * r.eta[0],
    ]
}

/// The factor `f` with `K_c = |eta| f - 1` on `T*S^3`:
/// `f = 1 + (eta1 xi2 - eta2 xi1)(1-xi0) + (a g1^2 + b g2^2 + g3^2/2)(1-xi0)
///      - (c + 1/2)(1-xi0)`.
pub fn fiber_factor(p: &ParameterSet, c: f64, r: &RegularizedState) -> f64 {
    let u = 1.0 - r.xi[0];
    let g = momentum_components(r);
    let coriolis = r.eta[1] * r.xi[2] - r.eta[2] * r.xi[1];
    let tidal = p.a * g[0] * g[0] + p.b * g[1] * g[1] + 0.5 * g[2] * g[2];
    1.0 + coriolis * u + tidal * u - (c + 0.5) * u
}

/// Regularized energy `|eta| f - 1` on `T*S^3`.
pub fn regularized_energy(p: &ParameterSet, c: f64, r: &RegularizedState) -> f64 {
    r.eta_norm() * fiber_factor(p, c, r) - 1.0
}

/// The smooth Hamiltonian `Q = |eta|^2 f^2 / 2` whose 1/2-level set is the
/// compactified energy hypersurface.
pub fn regularized_hamiltonian(p: &ParameterSet, c: f64, r: &RegularizedState) -> f64 {
    let nf = r.eta_norm() * fiber_factor(p, c, r);
    0.5 * nf * nf
}

/// `dQ(X)` for the fiber-radial Liouville field `X = sum eta_i d/d eta_i`:
/// `2Q + |eta|^2 f (1-xi0)(eta1 xi2 - eta2 xi1 + 2a g1^2 + 2b g2^2 + g3^2)`.
pub fn fiber_liouville_pairing(p: &ParameterSet, c: f64, r: &RegularizedState) -> f64 {
    let u = 1.0 - r.xi[0];
    let g = momentum_components(r);
    let f = fiber_factor(p, c, r);
    let n2 = r.eta_v().norm_squared();
    let coriolis = r.eta[1] * r.xi[2] - r.eta[2] * r.xi[1];
    let tidal2 = 2.0 * p.a * g[0] * g[0] + 2.0 * p.b * g[1] * g[1] + g[2] * g[2];
    n2 * f * f + n2 * f * u * (coriolis + tidal2)
}

/// Gradient of `Q` with respect to `(xi, eta)` as unconstrained R^8
/// coordinates; the flow module applies the tangency correction.
pub fn q_gradient(p: &ParameterSet, c: f64, r: &RegularizedState) -> ([f64; 4], [f64; 4]) {
    let u = 1.0 - r.xi[0];
    let g = momentum_components(r);
    let f = fiber_factor(p, c, r);
    let eta = r.eta;
    let xi = r.xi;
    let n2 = r.eta_v().norm_squared();
    let coriolis = eta[1] * xi[2] - eta[2] * xi[1];
    let tidal = p.a * g[0] * g[0] + p.b * g[1] * g[1] + 0.5 * g[2] * g[2];
    // f = 1 + u V with V = coriolis + tidal - (c + 1/2)
    let v = coriolis + tidal - (c + 0.5);
    let g_dot_xi = 2.0 * p.a * g[0] * xi[1] + 2.0 * p.b * g[1] * xi[2] + g[2] * xi[3];
    let g_dot_eta = 2.0 * p.a * g[0] * eta[1] + 2.0 * p.b * g[1] * eta[2] + g[2] * eta[3];

    let df_deta = [
        u * g_dot_xi,
        u * (xi[2] + 2.0 * p.a * g[0] * u),
        u * (-xi[1] + 2.0 * p.b * g[1] * u),
        u * (g[2] * u),
    ];
    let df_dxi = [
        -v - u * g_dot_eta,
        u * (-eta[2] + 2.0 * p.a * g[0] * eta[0]),
        u * (eta[1] + 2.0 * p.b * g[1] * eta[0]),
        u * (g[2] * eta[0]),
    ];
    let mut dq_dxi = [0.0; 4];
    let mut dq_deta = [0.0; 4];
    for k in 0..4 {
        dq_dxi[k] = n2 * f * df_dxi[k];
        dq_deta[k] = eta[k] * f * f + n2 * f * df_deta[k];
    }
    (dq_dxi, dq_deta)
}

const ROOT_BRACKET: (f64, f64) = (1e-6, 10.0);

/// Smallest positive fiber radius `t` with `t f(xi, t etahat) = 1` (the
/// positive branch of the regularized energy's zero set along the ray).
fn solve_fiber_radius(p: &ParameterSet, c: f64, xi: [f64; 4], eta_hat: [f64; 4]) -> Result<f64> {
    // t f(xi, t etahat) = c1 t + c2 t^2 + c3 t^3 with
    // c1 = 1 - (c + 1/2) u, c2 = (etahat1 xi2 - etahat2 xi1) u,
    // c3 = (a g1^2 + b g2^2 + g3^2/2) u computed from the unit direction.
    let u = 1.0 - xi[0];
    let unit = RegularizedState { xi, eta: eta_hat };
    let g = momentum_components(&unit);
    let c1 = 1.0 - (c + 0.5) * u;
    let c2 = (eta_hat[1] * xi[2] - eta_hat[2] * xi[1]) * u;
    let c3 = (p.a * g[0] * g[0] + p.b * g[1] * g[1] + 0.5 * g[2] * g[2]) * u;
    let eval = |t: f64| c1 * t + c2 * t * t + c3 * t * t * t - 1.0;

    let (mut lo, mut hi) = ROOT_BRACKET;
    if !(eval(lo) < 0.0 && eval(hi) > 0.0) {
        // scan for the first sign change to keep the smallest root
        let mut found = false;
        let mut t_prev = lo;
        for k in 1..=1000 {
            let t = lo + (hi - lo) * k as f64 / 1000.0;
            if eval(t) > 0.0 {
                hi = t;
                lo = t_prev;
                found = true;
                break;
            }
            t_prev = t;
        }
        if !found {
            return Err(Error::RootFind {
                lo: ROOT_BRACKET.0,
                hi: ROOT_BRACKET.1,
            });
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let deriv = c1 + 2.0 * c2 * t + 3.0 * c3 * t * t;
        if deriv.abs() > 1e-12 {
            t -= eval(t) / deriv;
        }
    }
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(Error::RootFind {
            lo: ROOT_BRACKET.0,
            hi: ROOT_BRACKET.1,
        })
    }
}

fn unit_sphere_dir3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let c: f64 = rng.sample(StandardNormal);
        let n = (a * a + b * b + c * c).sqrt();
        if n > 1e-12 {
            return [a / n, b / n, c / n];
        }
    }
}

fn sample_one_near_collision(
    p: &ParameterSet,
    c: f64,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<RegularizedState> {
    let delta = eps.min(1.9);
    for _ in 0..10_000 {
        let u = rng.gen_range(0.0..delta).max(1e-300);
        let xi0 = 1.0 - u;
        let spatial = (u * (2.0 - u)).max(0.0).sqrt();
        let w = unit_sphere_dir3(rng);
        let xi = [xi0, spatial * w[0], spatial * w[1], spatial * w[2]];
        // unit fiber direction orthogonal to xi
        let xiv = Vector4::from(xi);
        let eta_hat = loop {
            let v = Vector4::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let t = v - xiv.dot(&v) * xiv;
            if t.norm() > 1e-9 {
                break (t / t.norm()).into();
            }
        };
        // a failed root-find skips the base point rather than aborting
        let t = match solve_fiber_radius(p, c, xi, eta_hat) {
            Ok(t) => t,
            Err(Error::RootFind { .. }) => continue,
            Err(e) => return Err(e),
        };
        if t * u < eps {
            let eta = [
                t * eta_hat[0],
                t * eta_hat[1],
                t * eta_hat[2],
                t * eta_hat[3],
            ];
            return Ok(RegularizedState::projected(xi, eta));
        }
    }
    Err(Error::EmptyRegion { attempts: 10_000 })
}

/// Samples the regularized level set `Q = 1/2` over the collision
/// neighborhood `|P| = |eta|(1 - xi0) < eps`: the base point has
/// `1 - xi0` uniform in `(0, min(eps, 1.9))`, the fiber radius solves the
/// positive branch of `|eta| f = 1`, and samples violating the momentum
/// cutoff are rejected.
pub fn sample_q_level_near_collision(
    p: &ParameterSet,
    c: f64,
    eps: f64,
    n: u64,
    rng_seed: u64,
) -> Result<Vec<RegularizedState>> {
    if n == 0 {
        return Err(Error::Domain("sampling needs n >= 1".into()));
    }
    check_region(p, c, eps)?;
    let batches = run_scan_batches(n, rng_seed, |mut rng, _start, count| {
        (0..count)
            .map(|_| sample_one_near_collision(p, c, eps, &mut rng))
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(n as usize);
    for b in batches {
        out.extend(b?);
    }
    Ok(out)
}

fn check_region(p: &ParameterSet, c: f64, eps: f64) -> Result<()> {
    let (h12, _) = critical_values(p);
    if c >= h12 {
        return Err(Error::Domain(format!(
            "c = {c} must lie below H(L1/2) = {h12}"
        )));
    }
    if eps <= 0.0 {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// The magnitude whose maximum over the sampled region is the bound
/// constant: `|2a g1^2 + 2b g2^2 + g3^2|`.
fn tidal_magnitude(p: &ParameterSet, r: &RegularizedState) -> f64 {
    let g = momentum_components(r);
    (2.0 * p.a * g[0] * g[0] + 2.0 * p.b * g[1] * g[1] + g[2] * g[2]).abs()
}

/// Estimates the constant `A` bounding the tidal term over the collision
/// neighborhood `|P| < eps_probe` (sampled maximum inflated by 10%), and
/// the largest usable cutoff `eps_max = 1/(2(1 + A))` that keeps the
/// certified lower bound `1 - 2 eps (1 + A)` non-negative.
pub fn estimate_bound_constant(
    p: &ParameterSet,
    c: f64,
    eps_probe: f64,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    check_region(p, c, eps_probe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(u64::MAX); // probe stream, disjoint from scan batches
    let mut max_tidal = 0.0f64;
    for _ in 0..2048 {
        let r = sample_one_near_collision(p, c, eps_probe, &mut rng)?;
        max_tidal = max_tidal.max(tidal_magnitude(p, &r));
    }
    let a = 1.1 * max_tidal;
    Ok((a, 0.5 / (1.0 + a)))
}

use rand::SeedableRng;

/// Probe region for the bound constant: the scan cutoff is always capped
/// at `0.9 eps_max <= 0.45`, so probing `|P| < 0.5` covers it.
pub const EPS_PROBE: f64 = 0.5;

struct RegScanBatch {
    min_pairing: MinWitness,
    min_abs_f: f64,
    max_abs_eta: f64,
    min_chain_margin: f64,
}

/// Near-collision transversality scan: `min dQ(X) > 0` over `n` samples of
/// `Q = 1/2` with `|P| < eps`, certifying on every sample the proof-chain
/// bounds `|f| >= 1/2`, `|eta| <= 2` and
/// `dQ(X) >= 1 - 2 eps (1 + A) - 1e-10`.
///
/// `eps` defaults to (and is always capped at) `0.9 eps_max` from
/// [`estimate_bound_constant`].
pub fn regularized_transversality_scan(
    p: &ParameterSet,
    c: f64,
    eps: Option<f64>,
    n: u64,
    rng_seed: u64,
) -> Result<ScanReport> {
    if n == 0 {
        return Err(Error::Domain("an empty scan certifies nothing; n >= 1".into()));
    }
    let (a_const, eps_max) = estimate_bound_constant(p, c, EPS_PROBE, rng_seed)?;
    let eps = eps.unwrap_or(f64::INFINITY).min(0.9 * eps_max);
    check_region(p, c, eps)?;
    let lower_bound = 1.0 - 2.0 * eps * (1.0 + a_const);

    let batches = run_scan_batches(
        n,
        rng_seed,
        |mut rng, start, count| -> Result<RegScanBatch> {
            let mut acc = RegScanBatch {
                min_pairing: MinWitness::empty(),
                min_abs_f: f64::INFINITY,
                max_abs_eta: 0.0,
                min_chain_margin: f64::INFINITY,
            };
            for i in 0..count {
                let r = sample_one_near_collision(p, c, eps, &mut rng)?;
                let dqx = fiber_liouville_pairing(p, c, &r);
                acc.min_pairing.observe(dqx, start + i, &r.to_array());
                acc.min_abs_f = acc.min_abs_f.min(fiber_factor(p, c, &r).abs());
                acc.max_abs_eta = acc.max_abs_eta.max(r.eta_norm());
                acc.min_chain_margin = acc.min_chain_margin.min(dqx - lower_bound);
            }
            Ok(acc)
        },
    );
    let mut min_pairing = MinWitness::empty();
    let mut min_abs_f = f64::INFINITY;
    let mut max_abs_eta = 0.0f64;
    let mut min_chain_margin = f64::INFINITY;
    for b in batches {
        let b = b?;
        min_pairing = min_pairing.merge(b.min_pairing);
        min_abs_f = min_abs_f.min(b.min_abs_f);
        max_abs_eta = max_abs_eta.max(b.max_abs_eta);
        min_chain_margin = min_chain_margin.min(b.min_chain_margin);
    }
    let pass = min_pairing.value > 0.0
        && min_abs_f >= 0.5
        && max_abs_eta <= 2.0
        && min_chain_margin >= -1e-10;
    let mut extras = BTreeMap::new();
    extras.insert("bound_constant_a".into(), a_const);
    extras.insert("eps".into(), eps);
    extras.insert("eps_max".into(), eps_max);
    extras.insert("certified_lower_bound".into(), lower_bound);
    extras.insert("min_abs_f".into(), min_abs_f);
    extras.insert("max_abs_eta".into(), max_abs_eta);
    extras.insert("min_chain_margin".into(), min_chain_margin);
    Ok(ScanReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        min_value: min_pairing.value,
        argmin_kind: ArgminKind::Regularized,
        argmin: min_pairing.witness,
        n_samples: n,
        rng_seed,
        mu: p.mu,
        c: Some(c),
        bound_kind: "fiber_liouville_pairing_dQ_X".into(),
        extras,
    })
}
