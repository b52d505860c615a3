//! Linear (anti-)symplectic involutions of the spatial and planar systems.
//!
//! The spatial system carries eight linear symmetries forming
//! `Z2 x Z2 x Z2`: the symplectic `id`, `-id`, `sigma` (reflection at the
//! ecliptic), `-sigma` (pi-rotation around the z-axis), and the
//! anti-symplectic `rho1..rho4` (pi-rotations around the x/y-axes and
//! reflections at the xz/yz-planes). Restricting to `Fix(sigma)` yields the
//! planar Klein four group `{id, -id, rho_x, rho_y}`. Matrices are exact
//! integer signed matrices, so structural identities are checked exactly.

use crate::error::{Error, Result};
use crate::model::hamiltonian;
use crate::params::ParameterSet;
use crate::report::{run_scan_batches, ArgminKind, MinWitness, ScanReport, Verdict};
use crate::state::PhaseState;
use nalgebra::SMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type Mat6 = SMatrix<i32, 6, 6>;
pub type Mat4 = SMatrix<i32, 4, 4>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Symplectic,
    AntiSymplectic,
}

/// A linear involution of the 6-dimensional phase space with its
/// symplectic signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Involution {
    pub name: String,
    pub matrix: Mat6,
    pub kind: Kind,
}

/// A linear involution of the planar phase space `(x, y, px, py)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarInvolution {
    pub name: String,
    pub matrix: Mat4,
    pub kind: Kind,
}

/// Standard symplectic pairing matrix for `omega = sum dp_k ^ dk` in the
/// coordinate order `(x, y, z, px, py, pz)`.
pub fn symplectic_matrix() -> Mat6 {
    let mut j = Mat6::zeros();
    for k in 0..3 {
        j[(k, k + 3)] = -1;
        j[(k + 3, k)] = 1;
    }
    j
}

fn symplectic_matrix_planar() -> Mat4 {
    let mut j = Mat4::zeros();
    for k in 0..2 {
        j[(k, k + 2)] = -1;
        j[(k + 2, k)] = 1;
    }
    j
}

fn classify<const N: usize>(m: &SMatrix<i32, N, N>, j: &SMatrix<i32, N, N>) -> Option<Kind> {
    let mjm = m.transpose() * j * m;
    if mjm == *j {
        Some(Kind::Symplectic)
    } else if mjm == -j {
        Some(Kind::AntiSymplectic)
    } else {
        None
    }
}

impl Involution {
    /// Builds an involution from a signed integer matrix, verifying
    /// `M^2 = I` and `M^T J M = +-J` exactly.
    pub fn from_matrix(name: &str, matrix: Mat6) -> Result<Self> {
        if matrix * matrix != Mat6::identity() {
            return Err(Error::Domain(format!(
                "{name}: matrix squared is not the identity"
            )));
        }
        let kind = classify(&matrix, &symplectic_matrix()).ok_or_else(|| {
            Error::Domain(format!(
                "{name}: matrix is neither symplectic nor anti-symplectic"
            ))
        })?;
        Ok(Self {
            name: name.to_string(),
            matrix,
            kind,
        })
    }

    pub fn apply(&self, s: &PhaseState) -> PhaseState {
        let v = s.to_array();
        let mut out = [0.0; 6];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, vk) in v.iter().enumerate() {
                let m = self.matrix[(i, k)];
                if m != 0 {
                    acc += m as f64 * vk;
                }
            }
            *o = acc;
        }
        PhaseState::from_array(out)
    }

    /// Whether the planar subspace `{z = pz = 0}` is preserved setwise.
    pub fn preserves_planar_subspace(&self) -> bool {
        let planar = [0usize, 1, 3, 4];
        let normal = [2usize, 5];
        planar
            .iter()
            .all(|&i| normal.iter().all(|&k| self.matrix[(i, k)] == 0))
            && normal
                .iter()
                .all(|&i| planar.iter().all(|&k| self.matrix[(i, k)] == 0))
    }
}

impl PlanarInvolution {
    pub fn from_matrix(name: &str, matrix: Mat4) -> Result<Self> {
        if matrix * matrix != Mat4::identity() {
            return Err(Error::Domain(format!(
                "{name}: matrix squared is not the identity"
            )));
        }
        let kind = classify(&matrix, &symplectic_matrix_planar()).ok_or_else(|| {
            Error::Domain(format!(
                "{name}: matrix is neither symplectic nor anti-symplectic"
            ))
        })?;
        Ok(Self {
            name: name.to_string(),
            matrix,
            kind,
        })
    }

    /// Applies the involution to a planar state given as `(x, y, px, py)`.
    pub fn apply(&self, s: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            for (k, vk) in s.iter().enumerate() {
                let m = self.matrix[(i, k)];
                if m != 0 {
                    *o += m as f64 * vk;
                }
            }
        }
        out
    }
}

fn diagonal6(name: &str, signs: [i32; 6]) -> Involution {
    let mut m = Mat6::zeros();
    for (k, s) in signs.into_iter().enumerate() {
        m[(k, k)] = s;
    }
    Involution::from_matrix(name, m).expect("builtin involutions are valid")
}

fn diagonal4(name: &str, signs: [i32; 4]) -> PlanarInvolution {
    let mut m = Mat4::zeros();
    for (k, s) in signs.into_iter().enumerate() {
        m[(k, k)] = s;
    }
    PlanarInvolution::from_matrix(name, m).expect("builtin involutions are valid")
}

/// The eight spatial linear symmetries.
pub fn builtin_involutions() -> Vec<Involution> {
    vec![
        diagonal6("id", [1, 1, 1, 1, 1, 1]),
        diagonal6("-id", [-1, -1, -1, -1, -1, -1]),
        diagonal6("sigma", [1, 1, -1, 1, 1, -1]),
        diagonal6("-sigma", [-1, -1, 1, -1, -1, 1]),
        diagonal6("rho1", [1, -1, -1, -1, 1, 1]),
        diagonal6("rho2", [1, -1, 1, -1, 1, -1]),
        diagonal6("rho3", [-1, 1, -1, 1, -1, 1]),
        diagonal6("rho4", [-1, 1, 1, 1, -1, -1]),
    ]
}

/// The four planar linear symmetries on `(x, y, px, py)`.
pub fn builtin_planar_involutions() -> Vec<PlanarInvolution> {
    vec![
        diagonal4("id", [1, 1, 1, 1]),
        diagonal4("-id", [-1, -1, -1, -1]),
        diagonal4("rho_x", [1, -1, -1, 1]),
        diagonal4("rho_y", [-1, 1, 1, -1]),
    ]
}

/// The anti-symplectic cotangent lift of the coordinate swap
/// `(x, y, z) -> (y, x, z)`. It is an involution but not a symmetry of the
/// Hamiltonian (the tidal coefficients a and b differ); used as the
/// negative control in invariance scans.
pub fn swap_xy_lift() -> Involution {
    let mut m = Mat6::zeros();
    m[(0, 1)] = 1;
    m[(1, 0)] = 1;
    m[(2, 2)] = 1;
    m[(3, 4)] = -1;
    m[(4, 3)] = -1;
    m[(5, 5)] = -1;
    Involution::from_matrix("swap-xy", m).expect("swap lift is a valid involution")
}

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
        if s.radius() > 0.05 {
            return s;
        }
    }
}

const INVARIANCE_REL_TOL: f64 = 1e-12;

/// Scans `|H(inv(s)) - H(s)|` over random states and reports the margin
/// `tol - max relative deviation`; the verdict is `pass` iff the margin is
/// positive, i.e. iff the deviation stays below 1e-12 relative.
pub fn verify_hamiltonian_invariance(
    p: &ParameterSet,
    inv: &Involution,
    n_samples: u64,
    rng_seed: u64,
) -> Result<ScanReport> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be >= 1".into()));
    }
    let batches = run_scan_batches(n_samples, rng_seed, |mut rng, start, count| {
        let mut min_margin = MinWitness::empty();
        for i in 0..count {
            let s = random_state(&mut rng);
            let h = hamiltonian(p, &s).expect("radius guarded by sampler");
            let hi = hamiltonian(p, &inv.apply(&s)).expect("radius preserved by involution");
            let rel = (hi - h).abs() / h.abs().max(1.0);
            min_margin.observe(INVARIANCE_REL_TOL - rel, start + i, &s.to_array());
        }
        min_margin
    });
    let min_margin = batches
        .into_iter()
        .fold(MinWitness::empty(), MinWitness::merge);
    let mut extras = BTreeMap::new();
    extras.insert(
        "max_rel_deviation".into(),
        INVARIANCE_REL_TOL - min_margin.value,
    );
    extras.insert("rel_tolerance".into(), INVARIANCE_REL_TOL);
    Ok(ScanReport {
        verdict: if min_margin.value > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        min_value: min_margin.value,
        argmin_kind: ArgminKind::Phase,
        argmin: min_margin.witness,
        n_samples,
        rng_seed,
        mu: p.mu,
        c: None,
        bound_kind: format!("hamiltonian_invariance_margin[{}]", inv.name),
        extras,
    })
}

/// Composition table of the eight builtin symmetries. The product of any
/// two builtins is again a builtin; the table is the Cayley table of
/// `Z2 x Z2 x Z2`.
pub fn group_closure_table() -> Vec<Vec<String>> {
    let invs = builtin_involutions();
    invs.iter()
        .map(|a| {
            invs.iter()
                .map(|b| {
                    let prod = a.matrix * b.matrix;
                    invs.iter()
                        .find(|c| c.matrix == prod)
                        .map(|c| c.name.clone())
                        .expect("builtin symmetries are closed under composition")
                })
                .collect()
        })
        .collect()
}

/// Restriction of a spatial involution to the planar subspace
/// `Fix(sigma) = {z = pz = 0}`.
pub fn restrict_to_planar(inv: &Involution) -> Result<PlanarInvolution> {
    if !inv.preserves_planar_subspace() {
        return Err(Error::Domain(format!(
            "{}: does not preserve the planar subspace",
            inv.name
        )));
    }
    let idx = [0usize, 1, 3, 4];
    let mut m = Mat4::zeros();
    for (i, &ri) in idx.iter().enumerate() {
        for (k, &ck) in idx.iter().enumerate() {
            m[(i, k)] = inv.matrix[(ri, ck)];
        }
    }
    let name = builtin_planar_involutions()
        .into_iter()
        .find(|b| b.matrix == m)
        .map(|b| b.name)
        .unwrap_or_else(|| format!("{}|planar", inv.name));
    PlanarInvolution::from_matrix(&name, m)
}

/// Brute-force search for linear symmetries among signed permutation
/// matrices: keeps the involutions with symplectic signature that leave the
/// Hamiltonian invariant on probe states. The spatial symmetry group is
/// expected to be recovered exactly for every `mu`.
pub fn search_signed_permutation_symmetries(p: &ParameterSet, rng_seed: u64) -> Vec<Involution> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let probes: Vec<PhaseState> = (0..12).map(|_| random_state(&mut rng)).collect();
    let j = symplectic_matrix();

    let mut perm = [0usize, 1, 2, 3, 4, 5];
    let mut found = Vec::new();
    permutations(&mut perm, 0, &mut |perm| {
        for signs in 0..(1u32 << 6) {
            let mut m = Mat6::zeros();
            for (row, &col) in perm.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1 } else { 1 };
            }
            if m * m != Mat6::identity() || classify(&m, &j).is_none() {
                continue;
            }
            let inv = Involution::from_matrix("candidate", m).expect("structure checked");
            let invariant = probes.iter().all(|s| {
                let h = hamiltonian(p, s).expect("probe off singularity");
                let hi = hamiltonian(p, &inv.apply(s)).expect("probe off singularity");
                (hi - h).abs() <= 1e-9 * h.abs().max(1.0)
            });
            if invariant {
                found.push(inv);
            }
        }
    });
    // Name the survivors after the builtins where possible.
    let builtins = builtin_involutions();
    for f in &mut found {
        if let Some(b) = builtins.iter().find(|b| b.matrix == f.matrix) {
            f.name = b.name.clone();
        }
    }
    found
}

use rand::SeedableRng;

fn permutations(items: &mut [usize; 6], k: usize, visit: &mut impl FnMut(&[usize; 6])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_parameters;

    #[test]
    fn builtins_are_involutions_with_expected_signature() {
        for inv in builtin_involutions() {
            assert_eq!(inv.matrix * inv.matrix, Mat6::identity(), "{}", inv.name);
            let expected = match inv.name.as_str() {
                "id" | "-id" | "sigma" | "-sigma" => Kind::Symplectic,
                _ => Kind::AntiSymplectic,
            };
            assert_eq!(inv.kind, expected, "{}", inv.name);
        }
        for inv in builtin_planar_involutions() {
            assert_eq!(inv.matrix * inv.matrix, Mat4::identity());
            let expected = match inv.name.as_str() {
                "id" | "-id" => Kind::Symplectic,
                _ => Kind::AntiSymplectic,
            };
            assert_eq!(inv.kind, expected, "{}", inv.name);
        }
    }

    #[test]
    fn rho1_composed_with_rho2_is_sigma() {
        let invs = builtin_involutions();
        let get = |n: &str| invs.iter().find(|i| i.name == n).unwrap();
        let prod = get("rho1").matrix * get("rho2").matrix;
        assert_eq!(prod, get("sigma").matrix);
    }

    #[test]
    fn closure_table_is_z2_cubed() {
        let table = group_closure_table();
        assert_eq!(table.len(), 8);
        let invs = builtin_involutions();
        for (i, row) in table.iter().enumerate() {
            // every element is self-inverse
            assert_eq!(row[i], "id");
            // abelian
            for (k, entry) in row.iter().enumerate() {
                assert_eq!(*entry, table[k][i]);
            }
        }
        // exponent 2 + order 8 + closure => (Z2)^3
        assert_eq!(invs.len(), 8);
    }

    #[test]
    fn all_eight_leave_hamiltonian_invariant() {
        for &mu in &[0.0, 0.2, 0.5] {
            let p = derive_parameters(mu).unwrap();
            for inv in builtin_involutions() {
                let rep = verify_hamiltonian_invariance(&p, &inv, 2000, 7).unwrap();
                assert!(rep.passed(), "{} at mu={mu}: {:?}", inv.name, rep.min_value);
            }
        }
    }

    #[test]
    fn swap_lift_is_not_a_symmetry() {
        let p = derive_parameters(0.2).unwrap();
        let rep = verify_hamiltonian_invariance(&p, &swap_xy_lift(), 2000, 7).unwrap();
        assert!(!rep.passed());
        // witness state reproduces the reported margin
        let s = PhaseState::from_array(rep.argmin.clone().try_into().unwrap());
        let h = hamiltonian(&p, &s).unwrap();
        let hi = hamiltonian(&p, &swap_xy_lift().apply(&s)).unwrap();
        let margin = 1e-12 - (hi - h).abs() / h.abs().max(1.0);
        assert!((margin - rep.min_value).abs() < 1e-13);
    }

    #[test]
    fn planar_rho_x_preserves_planar_hamiltonian() {
        let p = derive_parameters(0.3).unwrap();
        let rho_x = builtin_planar_involutions()
            .into_iter()
            .find(|i| i.name == "rho_x")
            .unwrap();
        for (x, y, px, py) in [(0.4, 0.1, -0.2, 0.6), (-0.7, 0.3, 0.5, -0.1)] {
            let [xx, yy, ppx, ppy] = rho_x.apply([x, y, px, py]);
            let s = PhaseState::new(x, y, 0.0, px, py, 0.0);
            let si = PhaseState::new(xx, yy, 0.0, ppx, ppy, 0.0);
            let h = hamiltonian(&p, &s).unwrap();
            let hi = hamiltonian(&p, &si).unwrap();
            assert!((h - hi).abs() < 1e-12 * h.abs().max(1.0));
        }
    }

    #[test]
    fn projection_to_planar_is_two_to_one_and_onto() {
        let invs = builtin_involutions();
        let get = |n: &str| invs.iter().find(|i| i.name == n).unwrap();
        let pi = |n: &str| restrict_to_planar(get(n)).unwrap();

        assert_eq!(pi("rho1").name, "rho_x");
        assert_eq!(pi("rho2").name, "rho_x");
        assert_eq!(pi("rho3").name, "rho_y");
        assert_eq!(pi("rho4").name, "rho_y");
        assert_eq!(pi("sigma").name, "id");
        assert_eq!(pi("-sigma").name, "-id");
        assert_eq!(pi("id").name, "id");
        assert_eq!(pi("-id").name, "-id");

        // surjective onto the planar Klein four group
        let mut images: Vec<String> = invs
            .iter()
            .map(|i| restrict_to_planar(i).unwrap().name)
            .collect();
        images.sort();
        images.dedup();
        assert_eq!(images, vec!["-id", "id", "rho_x", "rho_y"]);

        // kind is preserved under restriction
        for inv in &invs {
            assert_eq!(restrict_to_planar(inv).unwrap().kind, inv.kind);
        }
    }

    #[test]
    fn restriction_rejects_non_preserving_matrix() {
        // x <-> z swap lift does not preserve the planar subspace
        let mut m = Mat6::zeros();
        m[(0, 2)] = 1;
        m[(1, 1)] = 1;
        m[(2, 0)] = 1;
        m[(3, 5)] = 1;
        m[(4, 4)] = 1;
        m[(5, 3)] = 1;
        let inv = Involution::from_matrix("swap-xz", m).unwrap();
        assert!(matches!(restrict_to_planar(&inv), Err(Error::Domain(_))));
    }

    #[test]
    fn signed_permutation_search_finds_exactly_the_eight() {
        for &mu in &[0.1, 0.5] {
            let p = derive_parameters(mu).unwrap();
            let found = search_signed_permutation_symmetries(&p, 3);
            assert_eq!(found.len(), 8, "mu = {mu}");
            let mut names: Vec<_> = found.iter().map(|i| i.name.clone()).collect();
            names.sort();
            let mut expected: Vec<_> = builtin_involutions()
                .iter()
                .map(|i| i.name.clone())
                .collect();
            expected.sort();
            assert_eq!(names, expected);
        }
    }
}
