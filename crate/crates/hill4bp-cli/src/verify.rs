//! The `verify-all` battery: every quantitative claim the library
//! certifies, run over a grid of mass ratios and energy offsets.

use hill4bp::contact::{lemma2_scan, lemma3_scan, sample_level_set, transversality_scan};
use hill4bp::flow::{
    closest_pole_approach, integrate_physical, integrate_regularized, physical_regularized_match,
    Termination,
};
use hill4bp::hill_region::{bounded_radius_check, component_census, GridSpec};
use hill4bp::lagrange::{
    collinear_points, critical_values, find_critical_points_numeric, lagrange_points,
    lift_to_phase, seed_grid,
};
use hill4bp::model::{hamiltonian, potential_gradient};
use hill4bp::params::{derive_parameters, derive_parameters_dd, rotation_diagonalization_check};
use hill4bp::regularization::{
    regularized_hamiltonian, regularized_transversality_scan, sphere_to_stereo, stereo_to_sphere,
    switch_map,
};
use hill4bp::{Error, PhaseState, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Serialize)]
pub struct CheckRow {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub pass: bool,
    pub detail: BTreeMap<String, f64>,
}

#[derive(Serialize)]
pub struct BatterySummary {
    pub mu_list: Vec<f64>,
    pub c_offsets: Vec<f64>,
    pub n: u64,
    pub n_pass: usize,
    pub n_fail: usize,
    pub all_pass: bool,
    pub checks: Vec<CheckRow>,
}

fn row(name: impl Into<String>, mu: Option<f64>, c: Option<f64>, pass: bool) -> CheckRow {
    CheckRow {
        name: name.into(),
        mu,
        c,
        pass,
        detail: BTreeMap::new(),
    }
}

impl CheckRow {
    fn with(mut self, key: &str, value: f64) -> Self {
        self.detail.insert(key.into(), value);
        self
    }
}

pub fn run_battery(
    mu_list: &[f64],
    c_offsets: &[f64],
    n: u64,
    seed: u64,
) -> Result<BatterySummary> {
    if mu_list.is_empty() || c_offsets.is_empty() {
        return Err(Error::Domain(
            "mu list and offset list must be non-empty".into(),
        ));
    }
    if c_offsets.iter().any(|o| *o <= 0.0) {
        return Err(Error::Domain(
            "c offsets must be positive (c = h12 - offset)".into(),
        ));
    }
    let mut checks = Vec::new();

    checks.push(rotation_grid_check()?);
    checks.extend(census_figure_facts()?);

    for &mu in mu_list {
        let p = derive_parameters(mu)?;
        let (h12, _) = critical_values(&p);

        checks.push(parameter_check(mu)?);
        checks.push(lagrange_check(mu)?);
        checks.push(lemma_checks(mu, true)?);
        checks.push(lemma_checks(mu, false)?);
        checks.push(regularization_consistency_check(
            mu,
            h12 - c_offsets[0],
            seed,
        )?);
        checks.push(census_refinement_check(mu, h12 - c_offsets[0])?);
        checks.push(flow_drift_check(mu, h12 - c_offsets[0], seed)?);
        checks.push(collision_transit_check(mu, h12 - c_offsets[0])?);
        checks.push(flow_match_check(mu, h12 - c_offsets[0], seed)?);

        for &off in c_offsets {
            let c = h12 - off;
            checks.push(census_check(mu, c)?);
            checks.push(corollary_check(mu, c)?);

            let spatial = transversality_scan(&p, c, n, seed, false)?;
            checks.push(
                row("contact_scan_spatial", Some(mu), Some(c), spatial.passed())
                    .with("min_dH_X", spatial.min_value)
                    .with("min_position_bound", spatial.extras["min_position_bound"])
                    .with("min_chain_margin", spatial.extras["min_chain_margin"]),
            );
            let planar = transversality_scan(&p, c, n, seed, true)?;
            checks.push(
                row("contact_scan_planar", Some(mu), Some(c), planar.passed())
                    .with("min_dH_X", planar.min_value),
            );
            let reg = regularized_transversality_scan(&p, c, None, n, seed)?;
            checks.push(
                row("regularized_scan", Some(mu), Some(c), reg.passed())
                    .with("min_dQ_X", reg.min_value)
                    .with("eps", reg.extras["eps"])
                    .with("bound_constant_a", reg.extras["bound_constant_a"])
                    .with("certified_lower_bound", reg.extras["certified_lower_bound"]),
            );
        }
    }

    let n_pass = checks.iter().filter(|c| c.pass).count();
    let n_fail = checks.len() - n_pass;
    Ok(BatterySummary {
        mu_list: mu_list.to_vec(),
        c_offsets: c_offsets.to_vec(),
        n,
        n_pass,
        n_fail,
        all_pass: n_fail == 0,
        checks,
    })
}

fn parameter_check(mu: f64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let dd = derive_parameters_dd(mu)?;
    let got = [p.d, p.lambda1, p.lambda2, p.a, p.b];
    let mut max_rel: f64 = 0.0;
    for (g, e) in got.iter().zip(dd.iter()) {
        let e = e.to_f64();
        if e != 0.0 {
            max_rel = max_rel.max((g - e).abs() / e.abs());
        } else {
            max_rel = max_rel.max(g.abs());
        }
    }
    let sum_err = (p.lambda1 + p.lambda2 - 3.0).abs();
    let ab_err = (p.a + p.b + 0.5).abs();
    let pass = max_rel <= 1e-14 && sum_err <= 1e-14 && ab_err <= 1e-14;
    Ok(row("parameter_identities", Some(mu), None, pass)
        .with("max_rel_vs_extended", max_rel)
        .with("lambda_sum_err", sum_err)
        .with("ab_sum_err", ab_err))
}

fn rotation_grid_check() -> Result<CheckRow> {
    let mut max_err: f64 = 0.0;
    for i in 0..=100 {
        let mu = 0.5 * i as f64 / 100.0;
        let p = derive_parameters(mu)?;
        let (lo, hi) = rotation_diagonalization_check(mu)?;
        max_err = max_err.max((lo - p.a).abs()).max((hi - p.b).abs());
    }
    Ok(
        row("rotation_diagonalization_101", None, None, max_err <= 1e-12)
            .with("max_abs_err", max_err),
    )
}

fn lagrange_check(mu: f64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let (h12, h34) = critical_values(&p);
    let points: Vec<_> = match lagrange_points(&p) {
        Ok(pts) => pts.to_vec(),
        Err(Error::Degenerate(_)) => collinear_points(&p).to_vec(),
        Err(e) => return Err(e),
    };
    let mut max_grad: f64 = 0.0;
    let mut max_h_err: f64 = 0.0;
    for (k, q) in points.iter().enumerate() {
        max_grad = max_grad.max(potential_gradient(&p, *q)?.norm());
        let h = hamiltonian(&p, &lift_to_phase(*q)?)?;
        let target = if k < 2 {
            h12
        } else {
            h34.expect("mu > 0 here")
        };
        max_h_err = max_h_err.max((h - target).abs() / target.abs());
    }
    let search = find_critical_points_numeric(&p, &seed_grid(-2.0, 2.0, 40, 0.05));
    let expected = points.len();
    let mut max_match: f64 = 0.0;
    for got in &search.points {
        let dist = points
            .iter()
            .map(|w| (got[0] - w.x).hypot(got[1] - w.y))
            .fold(f64::INFINITY, f64::min);
        max_match = max_match.max(dist);
    }
    let order_ok = h34.map(|h| h12 < h).unwrap_or(true);
    let pass = max_grad < 1e-10
        && max_h_err <= 1e-12
        && search.points.len() == expected
        && max_match < 1e-9
        && order_ok;
    Ok(row("lagrange_points", Some(mu), None, pass)
        .with("max_grad_norm", max_grad)
        .with("max_critical_value_rel_err", max_h_err)
        .with("newton_points_found", search.points.len() as f64)
        .with("newton_points_expected", expected as f64)
        .with("newton_max_mismatch", max_match))
}

fn lemma_checks(mu: f64, second: bool) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    if second {
        let rep = lemma2_scan(&p, 64)?;
        Ok(
            row("lemma2_radial_derivative", Some(mu), None, rep.passed())
                .with("min_dU_drho", rep.min_value)
                .with(
                    "min_pointwise_bound_margin",
                    rep.extras["min_pointwise_bound_margin"],
                ),
        )
    } else {
        let rep = lemma3_scan(&p, 64)?;
        Ok(row("lemma3_radial_concavity", Some(mu), None, rep.passed())
            .with("max_value", rep.extras["max_value"])
            .with(
                "chain_one_minus_two_lambda2",
                rep.extras["chain_one_minus_two_lambda2"],
            ))
    }
}

fn census_check(mu: f64, c: f64) -> Result<CheckRow> {
    // Below the first critical value there is exactly one bounded
    // component. The unbounded count depends on the census window (the
    // far region may connect only outside the [-3,3] box when lambda1 is
    // small), so it is reported but pinned only by the figure-facts rows.
    let p = derive_parameters(mu)?;
    let census = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 256))?;
    let pass = census.n_bounded == 1 && census.n_unbounded >= 1;
    Ok(row("hill_census", Some(mu), Some(c), pass)
        .with("n_bounded", census.n_bounded as f64)
        .with("n_unbounded", census.n_unbounded as f64)
        .with(
            "max_radius_bounded",
            census.max_radius_bounded.unwrap_or(f64::NAN),
        ))
}

/// The pinned census facts: counts at the reference mass ratios and
/// energies (one bounded + one unbounded at mu = 0.2; one bounded + two
/// unbounded at mu = 0; no bounded component between the critical values).
fn census_figure_facts() -> Result<Vec<CheckRow>> {
    let grid = GridSpec::planar(-3.0, 3.0, 256);
    let mut rows = Vec::new();

    let p = derive_parameters(0.2)?;
    let (h12, h34) = critical_values(&p);
    let below = component_census(&p, h12 - 0.1, &grid)?;
    rows.push(
        row(
            "census_fact_mu02_below_h12",
            Some(0.2),
            Some(h12 - 0.1),
            below.n_bounded == 1 && below.n_unbounded == 1,
        )
        .with("n_bounded", below.n_bounded as f64)
        .with("n_unbounded", below.n_unbounded as f64),
    );
    let mid_c = 0.5 * (h12 + h34.expect("mu > 0"));
    let mid = component_census(&p, mid_c, &grid)?;
    rows.push(
        row(
            "census_fact_mu02_between_critical",
            Some(0.2),
            Some(mid_c),
            mid.n_bounded == 0,
        )
        .with("n_bounded", mid.n_bounded as f64)
        .with("n_unbounded", mid.n_unbounded as f64),
    );

    let p0 = derive_parameters(0.0)?;
    let (h12_0, _) = critical_values(&p0);
    let hill = component_census(&p0, h12_0 - 0.1, &grid)?;
    rows.push(
        row(
            "census_fact_mu0_below_h12",
            Some(0.0),
            Some(h12_0 - 0.1),
            hill.n_bounded == 1 && hill.n_unbounded == 2,
        )
        .with("n_bounded", hill.n_bounded as f64)
        .with("n_unbounded", hill.n_unbounded as f64),
    );
    Ok(rows)
}

fn census_refinement_check(mu: f64, c: f64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let coarse = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 256))?;
    let fine = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 512))?;
    let pass = coarse.n_bounded == fine.n_bounded && coarse.n_unbounded == fine.n_unbounded;
    Ok(row("census_grid_refinement", Some(mu), Some(c), pass)
        .with("coarse_bounded", coarse.n_bounded as f64)
        .with("fine_bounded", fine.n_bounded as f64))
}

fn corollary_check(mu: f64, c: f64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let rep = bounded_radius_check(&p, c, 256)?;
    Ok(
        row("corollary_bounded_in_ball", Some(mu), Some(c), rep.passed())
            .with("radius_margin", rep.min_value)
            .with("max_radius_bounded", rep.extras["max_radius_bounded"])
            .with("r", rep.extras["r"]),
    )
}

fn regularization_consistency_check(mu: f64, c: f64, seed: u64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let mut max_round: f64 = 0.0;
    let mut max_rel_eta: f64 = 0.0;
    for _ in 0..10_000 {
        let s = PhaseState::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let r = stereo_to_sphere(&s);
        let back = sphere_to_stereo(&r)?;
        for (a, b) in back.to_array().iter().zip(s.to_array()) {
            max_round = max_round.max((a - b).abs() / b.abs().max(1.0));
        }
        let p_norm = s.momentum().norm();
        max_rel_eta =
            max_rel_eta.max((r.eta_norm() * (1.0 - r.xi[0]) - p_norm).abs() / p_norm.max(1.0));
    }
    let mut max_q_dev: f64 = 0.0;
    for s in sample_level_set(&p, c, 200, seed, false)? {
        let r = stereo_to_sphere(&switch_map(&s));
        max_q_dev = max_q_dev.max((regularized_hamiltonian(&p, c, &r) - 0.5).abs());
    }
    let pass = max_round <= 1e-12 && max_rel_eta <= 1e-12 && max_q_dev <= 1e-10;
    Ok(row("regularization_consistency", Some(mu), Some(c), pass)
        .with("max_round_trip_rel", max_round)
        .with("max_eta_relation_rel", max_rel_eta)
        .with("max_q_deviation", max_q_dev))
}

/// Picks a level-set state whose forward orbit stays clear of the
/// collision guard, deterministically over sample seeds.
fn benign_level_state(p: &hill4bp::ParameterSet, c: f64, seed: u64) -> Result<PhaseState> {
    for k in 0..20 {
        let s0 = sample_level_set(p, c, 1, seed.wrapping_add(k), false)?[0];
        let probe = integrate_physical(p, &s0, 10.0, 1e-8)?;
        let min_r = probe
            .states
            .iter()
            .map(|s| s.radius())
            .fold(f64::INFINITY, f64::min);
        if probe.termination == Termination::Completed && min_r > 0.03 {
            return Ok(s0);
        }
    }
    Err(Error::Domain(
        "no collision-avoiding sample found in 20 seeds".into(),
    ))
}

fn flow_drift_check(mu: f64, c: f64, seed: u64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let s0 = benign_level_state(&p, c, seed)?;
    let traj = integrate_physical(&p, &s0, 10.0, 1e-10)?;
    let pass = traj.termination == Termination::Completed && traj.max_energy_drift < 1e-8;
    Ok(row("flow_energy_drift", Some(mu), Some(c), pass)
        .with("max_energy_drift", traj.max_energy_drift)
        .with("t_final", 10.0))
}

fn collision_transit_check(mu: f64, c: f64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let pole = hill4bp::regularization::RegularizedState::projected(
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.8, -0.6, 0.0],
    );
    let back = integrate_regularized(&p, c, &pole, -1.0, 1e-11)?;
    let r0 = back.last_state();
    let (_, min_u) = closest_pole_approach(&p, c, &r0, 2.0, 1e-11)?;
    let traj = integrate_regularized(&p, c, &r0, 2.0, 1e-11)?;
    let pass = min_u < 1e-6 && traj.max_q_drift < 1e-8;
    Ok(row("collision_transit", Some(mu), Some(c), pass)
        .with("min_one_minus_xi0", min_u)
        .with("max_q_drift", traj.max_q_drift))
}

fn flow_match_check(mu: f64, c: f64, seed: u64) -> Result<CheckRow> {
    let p = derive_parameters(mu)?;
    let s0 = benign_level_state(&p, c, seed.wrapping_add(100))?;
    let err = physical_regularized_match(&p, c, &s0, 5.0, 40, 1e-11)?;
    Ok(row(
        "physical_vs_regularized_match",
        Some(mu),
        Some(c),
        err < 1e-6,
    )
    .with("max_position_err", err))
}
