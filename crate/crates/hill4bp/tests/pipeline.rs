//! Cross-module checks that walk a level-set sample through the whole
//! chart chain and compare both transversality pairings.

use hill4bp::contact::{liouville_pairing, sample_level_set};
use hill4bp::flow::symmetric_shooting;
use hill4bp::hill_region::{component_census, GridSpec};
use hill4bp::lagrange::critical_values;
use hill4bp::model::hamiltonian;
use hill4bp::params::derive_parameters;
use hill4bp::regularization::{
    fiber_liouville_pairing, regularized_hamiltonian, sphere_to_stereo, stereo_to_sphere,
    switch_map, unswitch_map,
};
use hill4bp::symmetry::builtin_involutions;

#[test]
fn level_set_samples_sit_in_the_bounded_census_component() {
    let p = derive_parameters(0.2).unwrap();
    let c = critical_values(&p).0 - 0.1;
    let census = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
    let bounded = census.bounded_component.unwrap();
    let grid = census.grid;
    for s in sample_level_set(&p, c, 500, 3, true).unwrap() {
        // locate the planar cell containing the sample; cells straddling
        // the zero-velocity curve are classified by their center, so a
        // boundary sample may sit in a forbidden-labeled cell whose
        // neighbor carries the bounded label
        let n = grid.n as f64;
        let ix = ((s.x - grid.lo) / (grid.hi - grid.lo) * n).floor() as usize;
        let iy = ((s.y - grid.lo) / (grid.hi - grid.lo) * n).floor() as usize;
        let neighborhood_hits_bounded = (-1i64..=1).any(|dx| {
            (-1i64..=1).any(|dy| {
                let x = ix as i64 + dx;
                let y = iy as i64 + dy;
                x >= 0
                    && y >= 0
                    && (x as usize) < grid.n
                    && (y as usize) < grid.n
                    && census.labels[x as usize + grid.n * y as usize] == bounded
            })
        });
        assert!(
            neighborhood_hits_bounded,
            "sample ({}, {}) fell outside K_c^b",
            s.x, s.y
        );
    }
}

#[test]
fn chart_chain_round_trips_and_couples_the_pairings() {
    // sample -> switch -> sphere -> back, with dQ(X) = |X| dH(X) on the way
    for &mu in &[0.0, 0.00095, 0.5] {
        let p = derive_parameters(mu).unwrap();
        let c = critical_values(&p).0 - 0.15;
        for s in sample_level_set(&p, c, 300, 11, false).unwrap() {
            let r = stereo_to_sphere(&switch_map(&s));
            assert!((regularized_hamiltonian(&p, c, &r) - 0.5).abs() < 1e-10);

            let back = unswitch_map(&sphere_to_stereo(&r).unwrap());
            for (a, b) in back.to_array().iter().zip(s.to_array()) {
                assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
            }
            assert!((hamiltonian(&p, &back).unwrap() - c).abs() < 1e-10);

            let dqx = fiber_liouville_pairing(&p, c, &r);
            let dhx = liouville_pairing(&p, &s).unwrap();
            let expected = s.radius() * dhx;
            assert!((dqx - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }
}

#[test]
fn retrograde_orbit_exists_at_positive_mass_ratio() {
    // the shooting scheme still converges when both distant primaries
    // carry mass (Sun-Jupiter ratio)
    let p = derive_parameters(0.00095).unwrap();
    let c = -3.0;
    let rho1 = builtin_involutions().into_iter().find(|i| i.name == "rho1").unwrap();
    let orbit = symmetric_shooting(&p, c, &rho1, -1.0 / (2.0 * c), 1e-11).unwrap();
    assert!(orbit.residual < 1e-9);
    let h = hamiltonian(&p, &orbit.initial).unwrap();
    assert!((h - c).abs() < 1e-10);
    assert!(orbit.period > 0.0);
}
