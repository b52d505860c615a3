//! Transversality of the radial Liouville field on the bounded energy
//! component, certified by direct sampling.
//!
//! The scanned quantity is the pairing `dH(X)` of the energy differential
//! with `X = x d/dx + y d/dy + z d/dz`. Below the first critical value the
//! pairing must be strictly positive on the bounded component; the scan
//! additionally certifies, sample by sample, the position-only lower bound
//! `rho (dU/drho - sin(phi) sqrt(2(c - U)))` obtained from Cauchy-Schwarz
//! and the energy relation, and the supporting radial-derivative
//! inequalities behind it.

use crate::error::{Error, Result};
use crate::lagrange::critical_values;
use crate::model::{
    angular_weight, effective_potential, potential_radial_derivative,
    potential_radial_second_derivative,
};
use crate::params::ParameterSet;
use crate::report::{run_scan_batches, ArgminKind, MinWitness, ScanReport, Verdict};
use crate::state::{PhaseState, SphericalPoint};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Radius below which the unregularized scan does not sample; the
/// collision neighborhood is owned by the regularized chart and the
/// pairing diverges to +infinity like 1/r there anyway.
pub const SCAN_RHO_MIN: f64 = 1e-3;

/// Slack for the literal pointwise proof-chain inequality
/// `dH(X) >= rho (dU/drho - sin(phi) sqrt(2(c-U)))`.
pub const CHAIN_SLACK: f64 = 1e-10;

/// `dH(X) = px y - py x + 2 a x^2 + 2 b y^2 + z^2 + 1/r` for the radial
/// Liouville field `X`.
pub fn liouville_pairing(p: &ParameterSet, s: &PhaseState) -> Result<f64> {
    let r = s.radius();
    if r < crate::state::R_MIN {
        return Err(Error::Singularity {
            r,
            r_min: crate::state::R_MIN,
        });
    }
    Ok(s.px * s.y - s.py * s.x
        + 2.0 * p.a * s.x * s.x
        + 2.0 * p.b * s.y * s.y
        + s.z * s.z
        + 1.0 / r)
}

/// Position-only lower bound for `dH(X)` on the level set `H = c`.
pub fn pairing_lower_bound(p: &ParameterSet, c: f64, pos: Vector3<f64>) -> Result<f64> {
    let sp = SphericalPoint::from_cartesian(pos);
    let du = potential_radial_derivative(p, &sp)?;
    let u = effective_potential(p, pos)?;
    let speed = (2.0 * (c - u)).max(0.0).sqrt();
    Ok(sp.rho * (du - sp.phi.sin() * speed))
}

/// Fixed-radius angular analysis of the effective potential: critical
/// points of `U_rho(theta, phi)`, the Hessian at the minimum and a grid
/// minimum cross-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub rho: f64,
    /// Max |gradient component| over the four closed-form critical points
    /// (expected exactly zero: every term carries an exact zero factor).
    pub critical_gradient_max: f64,
    /// Hessian diagonal at `(theta, phi) = (0, pi/2)`.
    pub hessian_diag: (f64, f64),
    pub hessian_off_diagonal: f64,
    pub grid_min: f64,
    pub grid_argmin: (f64, f64),
    /// `U(rho, 0, pi/2) = -1/rho - rho^2 lambda2 / 2`.
    pub closed_form_min: f64,
    pub pass: bool,
}

/// Gradient of `U_rho` in the angles, from precomputed trig pairs.
fn angular_gradient(p: &ParameterSet, rho: f64, st: f64, ct: f64, sf: f64, cf: f64) -> (f64, f64) {
    let r2 = rho * rho;
    let d_theta = r2 * (p.lambda2 - p.lambda1) * ct * st * sf * sf;
    let d_phi = -r2 * sf * cf * (p.lambda2 * ct * ct + p.lambda1 * st * st + 1.0);
    (d_theta, d_phi)
}

/// Verifies the angular minimum structure of `U_rho` for a fixed radius
/// `rho` in `(0, 1)`.
pub fn lemma1_check(p: &ParameterSet, rho: f64) -> Result<Lemma1Report> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    // four critical points with exact trig pairs: (theta, phi) in
    // {0, pi/2} x {0, pi/2}
    let pairs = [(0.0, 1.0), (1.0, 0.0)];
    let mut critical_gradient_max = 0.0f64;
    for (st, ct) in pairs {
        for (sf, cf) in pairs {
            let (dt, df) = angular_gradient(p, rho, st, ct, sf, cf);
            critical_gradient_max = critical_gradient_max.max(dt.abs()).max(df.abs());
        }
    }

    // Hessian at (0, pi/2): trig pairs (st, ct) = (0, 1), (sf, cf) = (1, 0)
    let r2 = rho * rho;
    let h_tt = r2 * (p.lambda2 - p.lambda1);
    let h_ff = r2 * (p.lambda2 + 1.0);
    let h_tf = 0.0;

    // grid minimum over [0, pi]^2 (the potential is pi-periodic in both
    // angles); even n so the grid contains (0, pi/2) exactly
    let n = 96;
    let mut grid_min = f64::INFINITY;
    let mut grid_argmin = (0.0, 0.0);
    for i in 0..n {
        for k in 0..=n {
            let theta = std::f64::consts::PI * i as f64 / n as f64;
            let phi = std::f64::consts::PI * k as f64 / n as f64;
            let (st, ct) = theta.sin_cos();
            let (sf, cf) = phi.sin_cos();
            let u = -1.0 / rho - 0.5 * r2 * angular_weight(p, st, ct, sf, cf);
            if u < grid_min {
                grid_min = u;
                grid_argmin = (theta, phi);
            }
        }
    }
    let closed_form_min = -1.0 / rho - 0.5 * r2 * p.lambda2;

    let pass = critical_gradient_max == 0.0
        && h_tt > 0.0
        && h_ff > 0.0
        && (grid_min - closed_form_min).abs() <= 1e-12 * closed_form_min.abs();
    Ok(Lemma1Report {
        rho,
        critical_gradient_max,
        hessian_diag: (h_tt, h_ff),
        hessian_off_diagonal: h_tf,
        grid_min,
        grid_argmin,
        closed_form_min,
        pass,
    })
}

/// Grid scan of `dU/drho` over the punctured ball `rho in (rho_min, r)`:
/// the claim is strict positivity, with the pointwise lower bound
/// `dU/drho >= 1/rho^2 - lambda2 rho` checked at every node.
pub fn lemma2_scan(p: &ParameterSet, grid_n: usize) -> Result<ScanReport> {
    if grid_n < 2 {
        return Err(Error::Domain("lemma scan grid needs n >= 2".into()));
    }
    let r = p.lambda2.powf(-1.0 / 3.0);
    let n = grid_n;
    let mut min_du = MinWitness::empty();
    let mut min_bound_margin = f64::INFINITY;
    let mut min_lower_bound = f64::INFINITY;
    let mut index = 0u64;
    for i in 0..n {
        // interior radii only: the lower bound vanishes exactly at rho = r
        let rho = SCAN_RHO_MIN + (r - SCAN_RHO_MIN) * (i as f64 + 1.0) / (n as f64 + 1.0);
        let lower = 1.0 / (rho * rho) - p.lambda2 * rho;
        min_lower_bound = min_lower_bound.min(lower);
        for k in 0..n {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            for m in 0..n {
                let phi = std::f64::consts::PI * m as f64 / (n as f64 - 1.0);
                let sp = SphericalPoint::new(rho, theta, phi);
                let du = potential_radial_derivative(p, &sp)?;
                min_du.observe(du, index, &[rho, theta, phi]);
                min_bound_margin = min_bound_margin.min(du - lower);
                index += 1;
            }
        }
    }
    let mut extras = BTreeMap::new();
    extras.insert("min_pointwise_bound_margin".into(), min_bound_margin);
    extras.insert("min_lower_bound_value".into(), min_lower_bound);
    extras.insert("r".into(), r);
    Ok(ScanReport {
        verdict: if min_du.value > 0.0 && min_bound_margin >= -1e-12 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        min_value: min_du.value,
        argmin_kind: ArgminKind::Spherical,
        argmin: min_du.witness,
        n_samples: index,
        rng_seed: 0,
        mu: p.mu,
        c: None,
        bound_kind: "radial_derivative_positive".into(),
        extras,
    })
}

/// Grid scan of `d2U/drho2 + sin^2(phi)` over `rho in (0, r]`: the claim
/// is that the maximum stays <= 0 (slack 1e-12). The constant chain
/// `-2/r^3 + 1 = -2 lambda2 + 1 <= -3` is checked alongside.
pub fn lemma3_scan(p: &ParameterSet, grid_n: usize) -> Result<ScanReport> {
    if grid_n < 2 {
        return Err(Error::Domain("lemma scan grid needs n >= 2".into()));
    }
    let r = p.lambda2.powf(-1.0 / 3.0);
    let n = grid_n;
    // track the maximum as the minimum of the negated quantity
    let mut min_neg = MinWitness::empty();
    let mut index = 0u64;
    for i in 0..n {
        let rho = r * (i as f64 + 1.0) / n as f64;
        for k in 0..n {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            for m in 0..n {
                let phi = std::f64::consts::PI * m as f64 / (n as f64 - 1.0);
                let sp = SphericalPoint::new(rho, theta, phi);
                let d2 = potential_radial_second_derivative(p, &sp)?;
                let sf = phi.sin();
                min_neg.observe(-(d2 + sf * sf), index, &[rho, theta, phi]);
                index += 1;
            }
        }
    }
    let max_value = -min_neg.value;
    let chain = -2.0 / (r * r * r) + 1.0;
    let chain_closed = 1.0 - 2.0 * p.lambda2;
    let mut extras = BTreeMap::new();
    extras.insert("max_value".into(), max_value);
    extras.insert("chain_minus_2_over_r3_plus_1".into(), chain);
    extras.insert("chain_one_minus_two_lambda2".into(), chain_closed);
    Ok(ScanReport {
        verdict: if max_value <= 1e-12
            && (chain - chain_closed).abs() < 1e-9
            && chain_closed <= -3.0
        {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        min_value: min_neg.value,
        argmin_kind: ArgminKind::Spherical,
        argmin: min_neg.witness,
        n_samples: index,
        rng_seed: 0,
        mu: p.mu,
        c: None,
        bound_kind: "negated_radial_concavity(max <= 0)".into(),
        extras,
    })
}

/// Rejection sampler for the bounded component of the energy level set.
///
/// Positions come from jittered cells of a census-style grid over the
/// bounded component (which is exactly `{U <= c}` inside the ball of
/// radius `lambda2^(-1/3)`); momenta are uniform on the sphere (or circle,
/// planar case) of radius `sqrt(2(c - U))` centered at `(-y, x, 0)`, which
/// places every sample on `H = c` by construction.
pub(crate) struct LevelSetSampler {
    params: ParameterSet,
    c: f64,
    r: f64,
    planar: bool,
    cells: Vec<Vector3<f64>>,
    half_cell: f64,
}

const REJECTION_LIMIT: u64 = 1_000_000;

impl LevelSetSampler {
    pub fn new(p: &ParameterSet, c: f64, planar: bool) -> Result<Self> {
        let (h12, _) = critical_values(p);
        if c >= h12 {
            return Err(Error::Domain(format!(
                "c = {c} must lie below H(L1/2) = {h12}"
            )));
        }
        let r = p.lambda2.powf(-1.0 / 3.0);
        let n = if planar { 192 } else { 48 };
        let step = 2.0 * r / n as f64;
        let half_cell = 0.5 * step;
        let centers = |i: usize| -r + step * (i as f64 + 0.5);
        let mut cells = Vec::new();
        let allowed = |pos: Vector3<f64>| -> bool {
            pos.norm() < r
                && (pos.norm() < SCAN_RHO_MIN
                    || effective_potential(p, pos).map(|u| u <= c).unwrap_or(true))
        };
        let corner_allowed = |pos: Vector3<f64>, dz: bool| -> bool {
            let offs = [-half_cell, half_cell];
            for dx in offs {
                for dy in offs {
                    if dz {
                        for dzv in offs {
                            if allowed(pos + Vector3::new(dx, dy, dzv)) {
                                return true;
                            }
                        }
                    } else if allowed(pos + Vector3::new(dx, dy, 0.0)) {
                        return true;
                    }
                }
            }
            false
        };
        if planar {
            for i in 0..n {
                for k in 0..n {
                    let pos = Vector3::new(centers(i), centers(k), 0.0);
                    if allowed(pos) || corner_allowed(pos, false) {
                        cells.push(pos);
                    }
                }
            }
        } else {
            for i in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let pos = Vector3::new(centers(i), centers(k), centers(m));
                        if allowed(pos) || corner_allowed(pos, true) {
                            cells.push(pos);
                        }
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::EmptyRegion { attempts: 0 });
        }
        Ok(Self {
            params: *p,
            c,
            r,
            planar,
            cells,
            half_cell,
        })
    }

    pub fn sample_position(&self, rng: &mut ChaCha8Rng) -> Result<Vector3<f64>> {
        for attempt in 0..REJECTION_LIMIT {
            let cell = self.cells[rng.gen_range(0..self.cells.len())];
            let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-self.half_cell..self.half_cell);
            let pos = if self.planar {
                cell + Vector3::new(jitter(rng), jitter(rng), 0.0)
            } else {
                cell + Vector3::new(jitter(rng), jitter(rng), jitter(rng))
            };
            let rho = pos.norm();
            if rho <= SCAN_RHO_MIN || rho >= self.r {
                continue;
            }
            if effective_potential(&self.params, pos)? <= self.c {
                return Ok(pos);
            }
            let _ = attempt;
        }
        Err(Error::EmptyRegion {
            attempts: REJECTION_LIMIT,
        })
    }

    pub fn sample_state(&self, rng: &mut ChaCha8Rng) -> Result<PhaseState> {
        let pos = self.sample_position(rng)?;
        let u = effective_potential(&self.params, pos)?;
        let speed = (2.0 * (self.c - u)).max(0.0).sqrt();
        let dir = if self.planar {
            loop {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let norm = a.hypot(b);
                if norm > 1e-12 {
                    break Vector3::new(a / norm, b / norm, 0.0);
                }
            }
        } else {
            loop {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let c: f64 = rng.sample(StandardNormal);
                let v = Vector3::new(a, b, c);
                if v.norm() > 1e-12 {
                    break v / v.norm();
                }
            }
        };
        let mom = Vector3::new(-pos.y, pos.x, 0.0) + speed * dir;
        Ok(PhaseState::from_parts(pos, mom))
    }
}

/// Draws `n` states on the bounded component of `H = c`; the `planar`
/// flag restricts to the invariant subspace `z = pz = 0`.
pub fn sample_level_set(
    p: &ParameterSet,
    c: f64,
    n: u64,
    rng_seed: u64,
    planar: bool,
) -> Result<Vec<PhaseState>> {
    if n == 0 {
        return Err(Error::Domain("sampling needs n >= 1".into()));
    }
    let sampler = LevelSetSampler::new(p, c, planar)?;
    let batches = run_scan_batches(n, rng_seed, |mut rng, _start, count| {
        (0..count)
            .map(|_| sampler.sample_state(&mut rng))
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(n as usize);
    for b in batches {
        out.extend(b?);
    }
    Ok(out)
}

struct TransversalityBatch {
    min_pairing: MinWitness,
    min_bound: MinWitness,
    min_chain_margin: f64,
}

/// Monte-Carlo certification of strict transversality on the bounded
/// component: `min dH(X) > 0` over `n` level-set samples, with the
/// position-only Cauchy-Schwarz bound checked pointwise
/// (`dH(X) >= bound - 1e-10` and `bound > 0`).
pub fn transversality_scan(
    p: &ParameterSet,
    c: f64,
    n: u64,
    rng_seed: u64,
    planar: bool,
) -> Result<ScanReport> {
    if n == 0 {
        return Err(Error::Domain("an empty scan certifies nothing; n >= 1".into()));
    }
    let sampler = LevelSetSampler::new(p, c, planar)?;
    let batches = run_scan_batches(
        n,
        rng_seed,
        |mut rng, start, count| -> Result<TransversalityBatch> {
            let mut acc = TransversalityBatch {
                min_pairing: MinWitness::empty(),
                min_bound: MinWitness::empty(),
                min_chain_margin: f64::INFINITY,
            };
            for i in 0..count {
                let s = sampler.sample_state(&mut rng)?;
                let pairing = liouville_pairing(p, &s)?;
                let bound = pairing_lower_bound(p, c, s.position())?;
                acc.min_pairing.observe(pairing, start + i, &s.to_array());
                acc.min_bound.observe(bound, start + i, &s.to_array());
                acc.min_chain_margin = acc.min_chain_margin.min(pairing - bound);
            }
            Ok(acc)
        },
    );
    let mut min_pairing = MinWitness::empty();
    let mut min_bound = MinWitness::empty();
    let mut min_chain_margin = f64::INFINITY;
    for b in batches {
        let b = b?;
        min_pairing = min_pairing.merge(b.min_pairing);
        min_bound = min_bound.merge(b.min_bound);
        min_chain_margin = min_chain_margin.min(b.min_chain_margin);
    }
    let pass = min_pairing.value > 0.0 && min_bound.value > 0.0 && min_chain_margin >= -CHAIN_SLACK;
    let mut extras = BTreeMap::new();
    extras.insert("min_position_bound".into(), min_bound.value);
    extras.insert("min_chain_margin".into(), min_chain_margin);
    extras.insert("chain_slack".into(), CHAIN_SLACK);
    extras.insert("planar".into(), if planar { 1.0 } else { 0.0 });
    Ok(ScanReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        min_value: min_pairing.value,
        argmin_kind: ArgminKind::Phase,
        argmin: min_pairing.witness,
        n_samples: n,
        rng_seed,
        mu: p.mu,
        c: Some(c),
        bound_kind: "liouville_pairing_dH_X".into(),
        extras,
    })
}
