//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (run with `--nocapture` to see them) and enforcing its runtime
//! budget.

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
    switch_map, RegularizedState,
};
use hill4bp::PhaseState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const REFERENCE_MUS: [f64; 4] = [0.0, 0.00095, 0.2, 0.5];
const C_OFFSETS: [f64; 3] = [0.01, 0.1, 0.5];
const SCAN_N: u64 = 100_000;
const SEED: u64 = 7;

struct Criterion {
    id: u32,
    what: &'static str,
    budget_s: f64,
    started: Instant,
}

impl Criterion {
    fn start(id: u32, what: &'static str, budget_s: f64) -> Self {
        Self {
            id,
            what,
            budget_s,
            started: Instant::now(),
        }
    }

    fn finish(self) {
        let elapsed = self.started.elapsed().as_secs_f64();
        println!(
            "criterion {:>2} PASS ({:>7.2}s / {:>5.0}s budget): {}",
            self.id, elapsed, self.budget_s, self.what
        );
        assert!(
            elapsed < self.budget_s,
            "criterion {} exceeded its runtime budget: {elapsed:.2}s >= {}s",
            self.id,
            self.budget_s
        );
    }
}

#[test]
fn criterion_01_parameter_table() {
    let c = Criterion::start(
        1,
        "parameter table matches extended precision to 1e-14",
        1.0,
    );
    for mu in REFERENCE_MUS {
        let p = derive_parameters(mu).unwrap();
        let dd = derive_parameters_dd(mu).unwrap();
        for (got, want) in [p.d, p.lambda1, p.lambda2, p.a, p.b].iter().zip(dd.iter()) {
            let want = want.to_f64();
            if want == 0.0 {
                assert_eq!(*got, 0.0, "mu={mu}");
            } else {
                assert!(
                    (got - want).abs() / want.abs() <= 1e-14,
                    "mu={mu}: {got} vs {want}"
                );
            }
        }
        assert!((p.lambda1 + p.lambda2 - 3.0).abs() <= 1e-14);
        assert!((p.a + p.b + 0.5).abs() <= 1e-14);
    }
    c.finish();
}

#[test]
fn criterion_02_rotation_check() {
    let c = Criterion::start(
        2,
        "pre-rotation quadratic eigenvalues equal {a, b} to 1e-12",
        1.0,
    );
    for i in 0..=100 {
        let mu = 0.5 * i as f64 / 100.0;
        let p = derive_parameters(mu).unwrap();
        let (lo, hi) = rotation_diagonalization_check(mu).unwrap();
        assert!((lo - p.a).abs() <= 1e-12, "mu={mu}");
        assert!((hi - p.b).abs() <= 1e-12, "mu={mu}");
    }
    c.finish();
}

#[test]
fn criterion_03_lagrange_points() {
    let c = Criterion::start(
        3,
        "Lagrange points: gradients, Newton oracle counts, critical values",
        10.0,
    );
    // gradient vanishes on a 101-value mu grid
    for i in 1..=101 {
        let mu = 0.5 * i as f64 / 101.0;
        let p = derive_parameters(mu).unwrap();
        for pt in lagrange_points(&p).unwrap() {
            assert!(
                potential_gradient(&p, pt).unwrap().norm() < 1e-10,
                "mu={mu}"
            );
        }
    }
    // Newton oracle recovers exactly 4 points at mu = 0.2, exactly 2 at mu = 0
    let seeds = seed_grid(-2.0, 2.0, 40, 0.05);
    let p02 = derive_parameters(0.2).unwrap();
    let found = find_critical_points_numeric(&p02, &seeds);
    assert_eq!(found.points.len(), 4);
    for got in &found.points {
        let best = lagrange_points(&p02)
            .unwrap()
            .iter()
            .map(|w| (got[0] - w.x).hypot(got[1] - w.y))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-9);
    }
    let p0 = derive_parameters(0.0).unwrap();
    let found0 = find_critical_points_numeric(&p0, &seeds);
    assert_eq!(found0.points.len(), 2);

    // lifted critical energies
    for mu in [0.00095, 0.2, 0.5] {
        let p = derive_parameters(mu).unwrap();
        let (h12, h34) = critical_values(&p);
        let pts = lagrange_points(&p).unwrap();
        for pt in &pts[..2] {
            let h = hamiltonian(&p, &lift_to_phase(*pt).unwrap()).unwrap();
            assert!((h - h12).abs() <= 1e-12 * h12.abs());
        }
        for pt in &pts[2..] {
            let h = hamiltonian(&p, &lift_to_phase(*pt).unwrap()).unwrap();
            assert!((h - h34.unwrap()).abs() <= 1e-12 * h34.unwrap().abs());
        }
        assert!(h12 < h34.unwrap());
    }
    let (h12_0, h34_0) = critical_values(&p0);
    let l1 = lift_to_phase(collinear_points(&p0)[0]).unwrap();
    assert!((hamiltonian(&p0, &l1).unwrap() - h12_0).abs() <= 1e-12 * h12_0.abs());
    assert!(h34_0.is_none());
    c.finish();
}

#[test]
fn criterion_04_hill_census() {
    let c = Criterion::start(4, "census counts stable under 256 -> 512 refinement", 30.0);
    let grid256 = GridSpec::planar(-3.0, 3.0, 256);
    let grid512 = GridSpec::planar(-3.0, 3.0, 512);

    let p02 = derive_parameters(0.2).unwrap();
    let (h12, h34) = critical_values(&p02);
    for grid in [&grid256, &grid512] {
        let census = component_census(&p02, h12 - 0.1, grid).unwrap();
        assert_eq!(
            (census.n_bounded, census.n_unbounded),
            (1, 1),
            "grid {}",
            grid.n
        );

        let mid = component_census(&p02, 0.5 * (h12 + h34.unwrap()), grid).unwrap();
        assert_eq!(mid.n_bounded, 0, "grid {}", grid.n);
    }

    let p0 = derive_parameters(0.0).unwrap();
    let (h12_0, _) = critical_values(&p0);
    for grid in [&grid256, &grid512] {
        let census = component_census(&p0, h12_0 - 0.1, grid).unwrap();
        assert_eq!(
            (census.n_bounded, census.n_unbounded),
            (1, 2),
            "grid {}",
            grid.n
        );
    }
    c.finish();
}

#[test]
fn criterion_05_corollary_radius_bound() {
    let c = Criterion::start(5, "bounded component contained in the critical ball", 30.0);
    for (mu, grid_n) in [(0.2, 256), (0.2, 512), (0.0, 256), (0.0, 512)] {
        let p = derive_parameters(mu).unwrap();
        let (h12, _) = critical_values(&p);
        let cc = h12 - 0.1;
        let r = p.lambda2.powf(-1.0 / 3.0);
        let census = component_census(&p, cc, &GridSpec::planar(-3.0, 3.0, grid_n)).unwrap();
        assert!(
            census.max_radius_bounded.unwrap() < r,
            "mu={mu} grid={grid_n}"
        );
        // sphere-grid certificate at the standard resolution
        if grid_n == 256 {
            let rep = bounded_radius_check(&p, cc, 256).unwrap();
            assert!(rep.passed(), "mu={mu}: {rep:?}");
        }
    }
    c.finish();
}

#[test]
fn criterion_06_lemma_scans() {
    let c = Criterion::start(6, "radial-derivative and concavity grid scans (64^3)", 20.0);
    for mu in [0.0, 0.2, 0.5] {
        let p = derive_parameters(mu).unwrap();
        let l2 = lemma2_scan(&p, 64).unwrap();
        assert!(l2.passed() && l2.min_value > 0.0, "mu={mu}: {l2:?}");
        let l3 = lemma3_scan(&p, 64).unwrap();
        assert!(l3.passed(), "mu={mu}: {l3:?}");
        assert!(l3.extras["max_value"] <= 1e-12);
    }
    c.finish();
}

#[test]
fn criterion_07_transversality_scan() {
    let c = Criterion::start(
        7,
        "dH(X) > 0 with the pointwise Cauchy-Schwarz chain on 100k samples per case",
        120.0,
    );
    for mu in REFERENCE_MUS {
        let p = derive_parameters(mu).unwrap();
        let (h12, _) = critical_values(&p);
        for off in C_OFFSETS {
            let cc = h12 - off;
            let spatial = transversality_scan(&p, cc, SCAN_N, SEED, false).unwrap();
            assert!(spatial.passed(), "mu={mu} off={off}: {spatial:?}");
            assert!(spatial.min_value > 0.0);
            assert!(spatial.extras["min_position_bound"] > 0.0);
            assert!(spatial.extras["min_chain_margin"] >= -1e-10);

            let planar = transversality_scan(&p, cc, SCAN_N, SEED, true).unwrap();
            assert!(planar.passed(), "mu={mu} off={off} planar: {planar:?}");
        }
    }
    c.finish();
}

#[test]
fn criterion_08_regularization_consistency() {
    let c = Criterion::start(
        8,
        "stereographic round trips, |eta|(1-xi0) = |P|, level-set maps onto Q = 1/2",
        10.0,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
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
        let back = sphere_to_stereo(&r).unwrap();
        for (a, b) in back.to_array().iter().zip(s.to_array()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let p_norm = s.momentum().norm();
        assert!((r.eta_norm() * (1.0 - r.xi[0]) - p_norm).abs() <= 1e-12 * p_norm.max(1.0));
    }
    for mu in [0.0, 0.2, 0.5] {
        let p = derive_parameters(mu).unwrap();
        let (h12, _) = critical_values(&p);
        let cc = h12 - 0.1;
        for s in sample_level_set(&p, cc, 500, SEED, false).unwrap() {
            let r = stereo_to_sphere(&switch_map(&s));
            assert!((regularized_hamiltonian(&p, cc, &r) - 0.5).abs() < 1e-10);
        }
    }
    c.finish();
}

#[test]
fn criterion_09_regularized_scan() {
    let c = Criterion::start(
        9,
        "dQ(X) > 0 near collision with |f| >= 1/2, |eta| <= 2 and the epsilon bound",
        120.0,
    );
    for mu in REFERENCE_MUS {
        let p = derive_parameters(mu).unwrap();
        let (h12, _) = critical_values(&p);
        for off in C_OFFSETS {
            let cc = h12 - off;
            let rep = regularized_transversality_scan(&p, cc, None, SCAN_N, SEED).unwrap();
            assert!(rep.passed(), "mu={mu} off={off}: {rep:?}");
            assert!(rep.min_value > 0.0);
            assert!(rep.extras["min_abs_f"] >= 0.5);
            assert!(rep.extras["max_abs_eta"] <= 2.0);
            assert!(rep.extras["min_chain_margin"] >= -1e-10);
            assert!(rep.extras["certified_lower_bound"] > 0.0);
        }
    }
    c.finish();
}

#[test]
fn criterion_10_flow_diagnostics() {
    let c = Criterion::start(
        10,
        "energy drift, collision transit through the pole fiber, chart matching",
        60.0,
    );
    let p = derive_parameters(0.2).unwrap();
    let (h12, _) = critical_values(&p);
    let cc = h12 - 0.2;

    // energy drift over t = 10 at tol 1e-10 on an orbit clear of collision
    let s0 = sample_level_set(&p, cc, 1, 5, false).unwrap()[0];
    let traj = integrate_physical(&p, &s0, 10.0, 1e-10).unwrap();
    assert_eq!(traj.termination, Termination::Completed);
    assert!(
        traj.max_energy_drift < 1e-8,
        "drift {}",
        traj.max_energy_drift
    );

    // collision transit: approach the North pole fiber within 1e-6 while
    // keeping |Q - 1/2| < 1e-8
    let pole = RegularizedState::projected([1.0, 0.0, 0.0, 0.0], [0.0, 0.8, -0.6, 0.0]);
    let r0 = integrate_regularized(&p, cc, &pole, -1.0, 1e-11)
        .unwrap()
        .last_state();
    let (_, min_u) = closest_pole_approach(&p, cc, &r0, 2.0, 1e-11).unwrap();
    assert!(min_u < 1e-6, "closest approach {min_u}");
    let transit = integrate_regularized(&p, cc, &r0, 2.0, 1e-11).unwrap();
    assert!(
        transit.max_q_drift < 1e-8,
        "Q drift {}",
        transit.max_q_drift
    );

    // physical vs regularized under the time reparametrization
    let err = physical_regularized_match(&p, cc, &s0, 5.0, 40, 1e-11).unwrap();
    assert!(err < 1e-6, "match error {err}");
    c.finish();
}

#[test]
fn criterion_11_determinism() {
    let c = Criterion::start(
        11,
        "verify-all is byte-identical across runs and thread counts",
        300.0,
    );
    let bin = env!("CARGO_BIN_EXE_hill4bp");
    let run = |threads: Option<&str>| {
        let mut cmd = std::process::Command::new(bin);
        cmd.args([
            "verify-all",
            "--mu-list",
            "0,0.2",
            "--c-offsets",
            "0.1",
            "--n",
            "50000",
            "--seed",
            "7",
        ]);
        if let Some(t) = threads {
            cmd.env("HILL4BP_THREADS", t);
        }
        let out = cmd.output().expect("verify-all runs");
        assert!(
            out.status.success(),
            "verify-all failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = run(None);
    let b = run(None);
    assert_eq!(a, b, "two identical invocations must agree byte for byte");
    let single = run(Some("1"));
    let multi = run(Some("4"));
    assert_eq!(single, multi, "thread count must not change the report");
    assert_eq!(a, single);
    c.finish();
}
