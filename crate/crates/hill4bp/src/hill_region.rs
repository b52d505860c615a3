//! Hill-region classification: sublevel sets of the effective potential,
//! connected-component census, the Corollary-type radius certificate and
//! zero-velocity contour extraction.

use crate::error::{Error, Result};
use crate::lagrange::critical_values;
use crate::model::{effective_potential, effective_potential_spherical, potential_gradient};
use crate::params::ParameterSet;
use crate::report::{ArgminKind, ScanReport, Verdict};
use crate::state::SphericalPoint;
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::VecDeque;

/// Cells whose center lies within this radius of the origin are treated as
/// allowed: the origin is in the closure of the bounded component and the
/// potential diverges to -infinity there.
pub const ORIGIN_SEED_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Allowed,
    Forbidden,
}

/// A position is allowed at energy `c` iff `U(pos) <= c`.
pub fn classify(p: &ParameterSet, c: f64, pos: Vector3<f64>) -> Result<Classification> {
    Ok(if effective_potential(p, pos)? <= c {
        Classification::Allowed
    } else {
        Classification::Forbidden
    })
}

/// Which slice of configuration space a census grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridKind {
    /// Axis-aligned plane of constant z (the ecliptic for `z = 0`).
    Planar { z: f64 },
    /// Full 3-dimensional box.
    Spatial,
}

/// Square (or cubic) grid over `[lo, hi]` per axis with `n` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub kind: GridKind,
}

impl GridSpec {
    pub fn planar(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            lo,
            hi,
            n,
            kind: GridKind::Planar { z: 0.0 },
        }
    }

    pub fn spatial(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            lo,
            hi,
            n,
            kind: GridKind::Spatial,
        }
    }

    pub fn cell_size(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    fn center(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * (i as f64 + 0.5) / self.n as f64
    }

    fn n_cells(&self) -> usize {
        match self.kind {
            GridKind::Planar { .. } => self.n * self.n,
            GridKind::Spatial => self.n * self.n * self.n,
        }
    }

    /// Cell-center position of the flat cell index.
    pub fn cell_center(&self, idx: usize) -> Vector3<f64> {
        match self.kind {
            GridKind::Planar { z } => {
                let i = idx % self.n;
                let k = idx / self.n;
                Vector3::new(self.center(i), self.center(k), z)
            }
            GridKind::Spatial => {
                let i = idx % self.n;
                let k = (idx / self.n) % self.n;
                let m = idx / (self.n * self.n);
                Vector3::new(self.center(i), self.center(k), self.center(m))
            }
        }
    }
}

/// Connected-component census of the allowed set `{U <= c}` on a grid.
///
/// A component is unbounded iff it touches the grid boundary; the far
/// field is allowed on every axis except z, so a box of half-width >= 3
/// makes this proxy reliable (documented as a proxy, not a proof).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionCensus {
    pub mu: f64,
    pub c: f64,
    pub grid: GridSpec,
    pub n_bounded: usize,
    pub n_unbounded: usize,
    /// Per-cell component label; 0 = forbidden, components are 1-based.
    pub labels: Vec<u32>,
    /// Cell count per component (index = label - 1).
    pub component_cells: Vec<usize>,
    pub component_unbounded: Vec<bool>,
    /// Label of the bounded component whose closure contains the origin,
    /// when it exists.
    pub bounded_component: Option<u32>,
    /// Max cell-center radius over the bounded component.
    pub max_radius_bounded: Option<f64>,
    pub warnings: Vec<String>,
}

/// The pinned census summary exposed by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusSummary {
    pub mu: f64,
    pub c: f64,
    pub n_bounded: usize,
    pub n_unbounded: usize,
    pub max_radius_bounded: Option<f64>,
}

impl RegionCensus {
    pub fn summary(&self) -> CensusSummary {
        CensusSummary {
            mu: self.mu,
            c: self.c,
            n_bounded: self.n_bounded,
            n_unbounded: self.n_unbounded,
            max_radius_bounded: self.max_radius_bounded,
        }
    }

    /// Flat indices of the cells in the bounded component.
    pub fn bounded_cells(&self) -> Vec<usize> {
        match self.bounded_component {
            None => Vec::new(),
            Some(label) => self
                .labels
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| (l == label).then_some(i))
                .collect(),
        }
    }
}

fn cell_allowed(p: &ParameterSet, c: f64, pos: Vector3<f64>) -> bool {
    let r = pos.norm();
    if r < ORIGIN_SEED_RADIUS {
        return true;
    }
    match effective_potential(p, pos) {
        Ok(u) => u <= c,
        Err(_) => true, // below the singularity guard: deep in the well
    }
}

/// Flood-fill census with 4-connectivity on slices and 6-connectivity in
/// 3D (conservative connectivity: no diagonal merges across pinch points).
pub fn component_census(p: &ParameterSet, c: f64, grid: &GridSpec) -> Result<RegionCensus> {
    if grid.n < 2 {
        return Err(Error::Domain(
            "census grid needs at least 2 cells per axis".into(),
        ));
    }
    if grid.hi <= grid.lo {
        return Err(Error::Domain("census grid box is empty".into()));
    }
    let n = grid.n;
    let n_cells = grid.n_cells();

    // allowed mask, rows in parallel
    let allowed: Vec<bool> = (0..n_cells)
        .into_par_iter()
        .with_min_len(n)
        .map(|idx| cell_allowed(p, c, grid.cell_center(idx)))
        .collect();

    // single-threaded BFS labeling for deterministic labels
    let spatial = matches!(grid.kind, GridKind::Spatial);
    let mut labels = vec![0u32; n_cells];
    let mut component_cells = Vec::new();
    let mut component_unbounded = Vec::new();
    let mut queue = VecDeque::new();
    let mut next = 1u32;
    for start in 0..n_cells {
        if !allowed[start] || labels[start] != 0 {
            continue;
        }
        let label = next;
        next += 1;
        let mut cells = 0usize;
        let mut touches_boundary = false;
        labels[start] = label;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            cells += 1;
            let (i, k, m) = if spatial {
                (idx % n, (idx / n) % n, idx / (n * n))
            } else {
                (idx % n, idx / n, 0)
            };
            let on_edge =
                i == 0 || i == n - 1 || k == 0 || k == n - 1 || (spatial && (m == 0 || m == n - 1));
            touches_boundary |= on_edge;
            let mut visit = |nb: usize| {
                if allowed[nb] && labels[nb] == 0 {
                    labels[nb] = label;
                    queue.push_back(nb);
                }
            };
            if i > 0 {
                visit(idx - 1);
            }
            if i < n - 1 {
                visit(idx + 1);
            }
            if k > 0 {
                visit(idx - n);
            }
            if k < n - 1 {
                visit(idx + n);
            }
            if spatial {
                if m > 0 {
                    visit(idx - n * n);
                }
                if m < n - 1 {
                    visit(idx + n * n);
                }
            }
        }
        component_cells.push(cells);
        component_unbounded.push(touches_boundary);
    }

    let mut warnings = Vec::new();
    for (k, &cells) in component_cells.iter().enumerate() {
        if cells <= 4 {
            warnings.push(format!(
                "ResolutionWarning: component {} has only {} cells",
                k + 1,
                cells
            ));
        }
    }

    // the bounded component containing the near-origin cells
    let origin_cell = (0..n_cells).filter(|&idx| allowed[idx]).min_by(|&a, &b| {
        grid.cell_center(a)
            .norm()
            .partial_cmp(&grid.cell_center(b).norm())
            .expect("finite norms")
    });
    let bounded_component = origin_cell.and_then(|idx| {
        let label = labels[idx];
        (!component_unbounded[(label - 1) as usize]).then_some(label)
    });
    let max_radius_bounded = bounded_component.map(|label| {
        labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| grid.cell_center(i).norm())
            .fold(0.0, f64::max)
    });

    Ok(RegionCensus {
        mu: p.mu,
        c,
        grid: *grid,
        n_bounded: component_unbounded.iter().filter(|u| !**u).count(),
        n_unbounded: component_unbounded.iter().filter(|u| **u).count(),
        labels,
        component_cells,
        component_unbounded,
        bounded_component,
        max_radius_bounded,
        warnings,
    })
}

/// Certifies that the bounded Hill-region component stays inside the ball
/// of radius `r = lambda2^(-1/3)` and that `U >= H(L1/2) > c` on the
/// sphere of that radius.
///
/// The reported `min_value` is the radius margin `r - max ||pos||` over
/// the bounded component's cells; the verdict also requires the
/// sphere-grid inequality.
pub fn bounded_radius_check(p: &ParameterSet, c: f64, grid_n: usize) -> Result<ScanReport> {
    let (h12, _) = critical_values(p);
    if c >= h12 {
        return Err(Error::Domain(format!(
            "c = {c} must lie below H(L1/2) = {h12}"
        )));
    }
    let r = p.lambda2.powf(-1.0 / 3.0);
    let census = component_census(p, c, &GridSpec::planar(-3.0, 3.0, grid_n))?;
    let mut max_radius = 0.0f64;
    let mut argmax = Vector3::zeros();
    for idx in census.bounded_cells() {
        let pos = census.grid.cell_center(idx);
        if pos.norm() > max_radius {
            max_radius = pos.norm();
            argmax = pos;
        }
    }

    // U on the bounding sphere, minimized over an angular grid
    let (n_theta, n_phi) = (256, 128);
    let mut sphere_min = f64::INFINITY;
    let mut sphere_argmin = (0.0, 0.0);
    for it in 0..n_theta {
        for ip in 0..=n_phi {
            let theta = std::f64::consts::TAU * it as f64 / n_theta as f64;
            let phi = std::f64::consts::PI * ip as f64 / n_phi as f64;
            let u = effective_potential_spherical(p, &SphericalPoint::new(r, theta, phi))?;
            if u < sphere_min {
                sphere_min = u;
                sphere_argmin = (theta, phi);
            }
        }
    }

    let margin = r - max_radius;
    let sphere_ok = sphere_min >= h12 - 1e-12 && h12 > c;
    let mut extras = BTreeMap::new();
    extras.insert("r".into(), r);
    extras.insert("max_radius_bounded".into(), max_radius);
    extras.insert("sphere_min_u".into(), sphere_min);
    extras.insert("sphere_argmin_theta".into(), sphere_argmin.0);
    extras.insert("sphere_argmin_phi".into(), sphere_argmin.1);
    extras.insert("h12".into(), h12);
    Ok(ScanReport {
        verdict: if margin > 0.0 && sphere_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        min_value: margin,
        argmin_kind: ArgminKind::Position,
        argmin: vec![argmax.x, argmax.y, argmax.z],
        n_samples: census.bounded_cells().len() as u64,
        rng_seed: 0,
        mu: p.mu,
        c: Some(c),
        bound_kind: "bounded_component_radius_margin".into(),
        extras,
    })
}

/// Marching-squares extraction of the zero-velocity curve `{U = c}` on a
/// planar slice, with one Newton refinement per vertex.
pub fn zero_velocity_contour(
    p: &ParameterSet,
    c: f64,
    grid: &GridSpec,
) -> Result<Vec<Vec<[f64; 2]>>> {
    let GridKind::Planar { z } = grid.kind else {
        return Err(Error::Domain(
            "contours are extracted on planar slices".into(),
        ));
    };
    let n = grid.n;
    let node = |i: usize| grid.lo + (grid.hi - grid.lo) * i as f64 / n as f64;
    let value = |x: f64, y: f64| -> f64 {
        let pos = Vector3::new(x, y, z);
        if pos.norm() < ORIGIN_SEED_RADIUS {
            // deep inside the well; any large negative value keeps the
            // sign pattern correct
            return c - 1e6;
        }
        effective_potential(p, pos).unwrap_or(c - 1e6)
    };

    // node values, rows in parallel
    let values: Vec<f64> = (0..(n + 1) * (n + 1))
        .into_par_iter()
        .with_min_len(n + 1)
        .map(|idx| value(node(idx % (n + 1)), node(idx / (n + 1))))
        .collect();
    let val = |i: usize, k: usize| values[i + (n + 1) * k];

    // Each contour vertex lives on a grid edge; identify edges by
    // (horizontal?, i, k) so neighboring cells share vertices exactly.
    #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
    enum EdgeId {
        H(usize, usize),
        V(usize, usize),
    }
    let interp = |edge: EdgeId| -> [f64; 2] {
        match edge {
            EdgeId::H(i, k) => {
                let (fa, fb) = (val(i, k), val(i + 1, k));
                let t = ((c - fa) / (fb - fa)).clamp(0.0, 1.0);
                [node(i) + t * (node(i + 1) - node(i)), node(k)]
            }
            EdgeId::V(i, k) => {
                let (fa, fb) = (val(i, k), val(i, k + 1));
                let t = ((c - fa) / (fb - fa)).clamp(0.0, 1.0);
                [node(i), node(k) + t * (node(k + 1) - node(k))]
            }
        }
    };

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for k in 0..n {
        for i in 0..n {
            let inside = |f: f64| f <= c;
            let f00 = val(i, k);
            let f10 = val(i + 1, k);
            let f11 = val(i + 1, k + 1);
            let f01 = val(i, k + 1);
            let case = inside(f00) as u8
                | (inside(f10) as u8) << 1
                | (inside(f11) as u8) << 2
                | (inside(f01) as u8) << 3;
            let b = EdgeId::H(i, k);
            let t = EdgeId::H(i, k + 1);
            let l = EdgeId::V(i, k);
            let r = EdgeId::V(i + 1, k);
            match case {
                0 | 15 => {}
                1 => segments.push((l, b)),
                2 => segments.push((b, r)),
                3 => segments.push((l, r)),
                4 => segments.push((t, r)),
                5 => {
                    let center_inside = inside(0.25 * (f00 + f10 + f11 + f01));
                    if center_inside {
                        segments.push((b, r));
                        segments.push((l, t));
                    } else {
                        segments.push((l, b));
                        segments.push((t, r));
                    }
                }
                6 => segments.push((b, t)),
                7 => segments.push((l, t)),
                8 => segments.push((l, t)),
                9 => segments.push((b, t)),
                10 => {
                    let center_inside = inside(0.25 * (f00 + f10 + f11 + f01));
                    if center_inside {
                        segments.push((l, b));
                        segments.push((t, r));
                    } else {
                        segments.push((b, r));
                        segments.push((l, t));
                    }
                }
                11 => segments.push((t, r)),
                12 => segments.push((l, r)),
                13 => segments.push((b, r)),
                14 => segments.push((l, b)),
                _ => unreachable!(),
            }
        }
    }

    // chain segments into polylines
    let mut adjacency: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    for (si, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(si);
        adjacency.entry(*b).or_default().push(si);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines: Vec<Vec<EdgeId>> = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = VecDeque::from([a, b]);
        // extend forward then backward
        for forward in [true, false] {
            loop {
                let tip = if forward {
                    *chain.back().unwrap()
                } else {
                    *chain.front().unwrap()
                };
                let Some(next_seg) = adjacency
                    .get(&tip)
                    .and_then(|list| list.iter().find(|&&si| !used[si]))
                    .copied()
                else {
                    break;
                };
                used[next_seg] = true;
                let (a, b) = segments[next_seg];
                let other = if a == tip { b } else { a };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
            }
        }
        polylines.push(chain.into_iter().collect());
    }

    // interpolate and refine each vertex with one Newton step toward U = c
    let refined = polylines
        .into_iter()
        .map(|chain| {
            chain
                .into_iter()
                .map(|edge| {
                    let [x, y] = interp(edge);
                    let pos = Vector3::new(x, y, z);
                    if pos.norm() < 2.0 * ORIGIN_SEED_RADIUS {
                        return [x, y];
                    }
                    match (effective_potential(p, pos), potential_gradient(p, pos)) {
                        (Ok(u), Ok(g)) => {
                            let g2 = g.x * g.x + g.y * g.y;
                            if g2 > 1e-12 {
                                let step = (u - c) / g2;
                                [x - step * g.x, y - step * g.y]
                            } else {
                                [x, y]
                            }
                        }
                        _ => [x, y],
                    }
                })
                .collect()
        })
        .collect();
    Ok(refined)
}

/// CSV rendering of contour polylines with columns `curve_id,x,y`.
pub fn contour_csv(polylines: &[Vec<[f64; 2]>]) -> String {
    let mut out = String::from("curve_id,x,y\n");
    for (id, line) in polylines.iter().enumerate() {
        for v in line {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", id, v[0], v[1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrange::critical_values;
    use crate::params::derive_parameters;

    fn c_below(p: &ParameterSet, offset: f64) -> f64 {
        critical_values(p).0 - offset
    }

    #[test]
    fn classify_matches_hand_values() {
        let p = derive_parameters(0.2).unwrap();
        let c = c_below(&p, 0.1);
        // U(0.1, 0, 0) = -10 - lambda2/200 ~ -10.013
        assert_eq!(
            classify(&p, c, Vector3::new(0.1, 0.0, 0.0)).unwrap(),
            Classification::Allowed
        );
        // L1 is forbidden below the critical value
        let l1 = crate::lagrange::collinear_points(&p)[0];
        assert_eq!(classify(&p, c, l1).unwrap(), Classification::Forbidden);
        // far along the x-axis the quadratic term dominates
        assert_eq!(
            classify(&p, c, Vector3::new(50.0, 0.0, 0.0)).unwrap(),
            Classification::Allowed
        );
    }

    #[test]
    fn census_counts_mu_point_two() {
        let p = derive_parameters(0.2).unwrap();
        let census =
            component_census(&p, c_below(&p, 0.1), &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        assert_eq!(census.n_bounded, 1);
        assert_eq!(census.n_unbounded, 1);
        assert!(census.bounded_component.is_some());
    }

    #[test]
    fn census_counts_mu_zero_two_unbounded() {
        let p = derive_parameters(0.0).unwrap();
        let census =
            component_census(&p, c_below(&p, 0.1), &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        assert_eq!(census.n_bounded, 1);
        assert_eq!(census.n_unbounded, 2);
    }

    #[test]
    fn census_between_critical_values_has_no_bounded() {
        let p = derive_parameters(0.2).unwrap();
        let (h12, h34) = critical_values(&p);
        let c = 0.5 * (h12 + h34.unwrap());
        let census = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        assert_eq!(census.n_bounded, 0);
        assert!(census.bounded_component.is_none());
        assert!(census.max_radius_bounded.is_none());
    }

    #[test]
    fn census_monotone_in_c() {
        let p = derive_parameters(0.2).unwrap();
        let grid = GridSpec::planar(-3.0, 3.0, 128);
        let c2 = c_below(&p, 0.05);
        let c1 = c_below(&p, 0.4);
        let a = component_census(&p, c1, &grid).unwrap();
        let b = component_census(&p, c2, &grid).unwrap();
        for (la, lb) in a.labels.iter().zip(b.labels.iter()) {
            if *la != 0 {
                assert_ne!(*lb, 0, "allowed set must grow with c");
            }
        }
    }

    #[test]
    fn census_stable_under_refinement() {
        let p = derive_parameters(0.2).unwrap();
        let c = c_below(&p, 0.1);
        let a = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        let b = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 512)).unwrap();
        assert_eq!(a.n_bounded, b.n_bounded);
        assert_eq!(a.n_unbounded, b.n_unbounded);
    }

    #[test]
    fn spatial_census_matches_planar_counts() {
        let p = derive_parameters(0.2).unwrap();
        let c = c_below(&p, 0.1);
        let census = component_census(&p, c, &GridSpec::spatial(-3.0, 3.0, 64)).unwrap();
        assert_eq!(census.n_bounded, 1);
        assert_eq!(census.n_unbounded, 1);
    }

    #[test]
    fn corollary_radius_certificate() {
        for &mu in &[0.0, 0.2, 0.5] {
            let p = derive_parameters(mu).unwrap();
            let report = bounded_radius_check(&p, c_below(&p, 0.05), 256).unwrap();
            assert!(report.passed(), "mu={mu}: {report:?}");
            let r = p.lambda2.powf(-1.0 / 3.0);
            let max_radius = report.extras["max_radius_bounded"];
            assert!(max_radius < r);
            // witness reproduces the margin
            let w = Vector3::new(report.argmin[0], report.argmin[1], report.argmin[2]);
            assert!((r - w.norm() - report.min_value).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_minimum_sits_at_positive_x_axis() {
        // U(r, theta, phi) is minimal at (0, pi/2) up to the pi-periodicity
        let p = derive_parameters(0.2).unwrap();
        let report = bounded_radius_check(&p, c_below(&p, 0.1), 128).unwrap();
        let (h12, _) = critical_values(&p);
        assert!((report.extras["sphere_min_u"] - h12).abs() < 1e-10);
        let theta = report.extras["sphere_argmin_theta"];
        let phi = report.extras["sphere_argmin_phi"];
        let pi = std::f64::consts::PI;
        assert!((theta % pi).min(pi - theta % pi) < 1e-9, "theta = {theta}");
        assert!((phi - pi / 2.0).abs() < 1e-9, "phi = {phi}");
    }

    #[test]
    fn bounded_region_shrinks_as_c_decreases() {
        let p = derive_parameters(0.2).unwrap();
        let grid = GridSpec::planar(-3.0, 3.0, 128);
        let mut last = f64::INFINITY;
        for offset in [0.05, 0.2, 0.5, 1.0, 2.0] {
            let census = component_census(&p, c_below(&p, offset), &grid).unwrap();
            let radius = census.max_radius_bounded.unwrap();
            assert!(radius <= last, "offset {offset}: {radius} vs {last}");
            last = radius;
        }
    }

    #[test]
    fn contour_vertices_lie_on_level_set() {
        let p = derive_parameters(0.2).unwrap();
        let c = c_below(&p, 0.05);
        let lines = zero_velocity_contour(&p, c, &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        assert!(!lines.is_empty());
        let mut checked = 0;
        for line in &lines {
            for v in line {
                let pos = Vector3::new(v[0], v[1], 0.0);
                if pos.norm() < 0.05 {
                    continue;
                }
                let u = effective_potential(&p, pos).unwrap();
                assert!(
                    (u - c).abs() < 1e-3 * c.abs(),
                    "vertex {v:?}: |U - c| = {}",
                    (u - c).abs()
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn inner_contour_pinches_toward_collinear_points() {
        // slightly below h12 the inner oval approaches (+-lambda2^(-1/3), 0)
        let p = derive_parameters(0.2).unwrap();
        let c = c_below(&p, 0.01);
        let lines = zero_velocity_contour(&p, c, &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        let l1x = p.lambda2.powf(-1.0 / 3.0);
        let close = lines
            .iter()
            .flatten()
            .any(|v| (v[0] - l1x).hypot(v[1]) < 0.08 || (v[0] + l1x).hypot(v[1]) < 0.08);
        assert!(close, "no contour vertex near the collinear points");
    }

    #[test]
    fn outer_contour_pinches_toward_triangular_points_below_h34() {
        let p = derive_parameters(0.2).unwrap();
        let (_, h34) = critical_values(&p);
        let c = h34.unwrap() - 0.002;
        let lines = zero_velocity_contour(&p, c, &GridSpec::planar(-3.0, 3.0, 256)).unwrap();
        let l3y = p.lambda1.powf(-1.0 / 3.0);
        let close = lines
            .iter()
            .flatten()
            .any(|v| v[0].hypot(v[1] - l3y) < 0.1 || v[0].hypot(v[1] + l3y) < 0.1);
        assert!(close, "no contour vertex near the triangular points");
    }

    #[test]
    fn tiny_component_raises_resolution_warning() {
        // deep below the critical value the bounded oval covers only a
        // handful of coarse cells
        let p = derive_parameters(0.2).unwrap();
        let c = critical_values(&p).0 - 10.0;
        let census = component_census(&p, c, &GridSpec::planar(-3.0, 3.0, 64)).unwrap();
        assert_eq!(census.n_bounded, 1);
        assert!(
            census
                .warnings
                .iter()
                .any(|w| w.contains("ResolutionWarning")),
            "{:?}",
            census.warnings
        );
    }

    #[test]
    fn contour_csv_has_header_and_rows() {
        let p = derive_parameters(0.2).unwrap();
        let lines =
            zero_velocity_contour(&p, c_below(&p, 0.1), &GridSpec::planar(-3.0, 3.0, 64)).unwrap();
        let csv = contour_csv(&lines);
        assert!(csv.starts_with("curve_id,x,y\n"));
        assert!(csv.lines().count() > 10);
    }
}
