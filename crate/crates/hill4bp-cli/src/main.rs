//! Command-line verification runs and figure-data exports.

mod verify;

use clap::{Parser, Subcommand};
use hill4bp::contact::transversality_scan;
use hill4bp::flow::{integrate_physical, integrate_regularized};
use hill4bp::hill_region::{
    component_census, contour_csv, zero_velocity_contour, GridKind, GridSpec,
};
use hill4bp::lagrange::{collinear_points, critical_values, lagrange_points};
use hill4bp::model::potential_gradient;
use hill4bp::params::{derive_parameters, rotation_diagonalization_check};
use hill4bp::regularization::{regularized_transversality_scan, stereo_to_sphere, switch_map};
use hill4bp::symmetry::{
    builtin_involutions, group_closure_table, restrict_to_planar, swap_xy_lift,
    verify_hamiltonian_invariance,
};
use hill4bp::{Error, PhaseState};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hill4bp",
    version,
    about = "Spatial Hill four-body model: parameters, Lagrange points, Hill regions, \
             transversality scans and flow integration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derived constants for one mass ratio, or the full parameter table as CSV.
    Params {
        #[arg(long, required_unless_present = "table")]
        mu: Option<f64>,
        /// Emit a CSV table over an even mu-grid instead of JSON.
        #[arg(long)]
        table: bool,
        #[arg(long, default_value_t = 101)]
        mu_steps: usize,
    },
    /// Lagrange points and critical energy values.
    Lagrange {
        #[arg(long)]
        mu: f64,
    },
    /// Hill-region component census on a planar slice, with optional
    /// zero-velocity contour export.
    HillRegion {
        #[arg(long)]
        mu: f64,
        #[arg(long, conflicts_with = "c_offset", allow_hyphen_values = true)]
        c: Option<f64>,
        /// Energy below the first critical value: c = H(L1/2) - offset.
        #[arg(long)]
        c_offset: Option<f64>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Constant-z slice (the ecliptic by default).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        slice: f64,
        /// Write the marching-squares contour of {U = c} to this CSV file.
        #[arg(long)]
        contour: Option<String>,
    },
    /// Transversality scan of dH(X) on the bounded energy component.
    ScanContact {
        #[arg(long)]
        mu: f64,
        #[arg(long, conflicts_with = "c_offset", allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long)]
        c_offset: Option<f64>,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        /// Restrict to the planar invariant subspace z = pz = 0.
        #[arg(long)]
        planar: bool,
        /// Write per-sample rows (state, dH(X), position bound) to this CSV file.
        #[arg(long)]
        dump: Option<String>,
    },
    /// Near-collision transversality scan of dQ(X) on the regularized level set.
    ScanRegularized {
        #[arg(long)]
        mu: f64,
        #[arg(long, conflicts_with = "c_offset", allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long)]
        c_offset: Option<f64>,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        /// Momentum cutoff |P| < eps (capped at 0.9 of the certified maximum).
        #[arg(long)]
        eps: Option<f64>,
        /// Write per-sample rows (xi, eta, Q, dQ(X), bound terms) to this CSV file.
        #[arg(long)]
        dump: Option<String>,
    },
    /// Hamiltonian-invariance report and the closure table of the symmetry group.
    Symmetry {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 4096)]
        n: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Integrate a trajectory and print it as CSV.
    Integrate {
        #[arg(long)]
        mu: f64,
        /// Six comma-separated phase-space coordinates x,y,z,px,py,pz.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Vec<f64>,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Integrate the regularized flow of Q instead (requires --c; the
        /// state is mapped through switch + stereographic projection).
        #[arg(long)]
        regularized: bool,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
    },
    /// Full verification battery over mass-ratio and energy-offset grids.
    VerifyAll {
        #[arg(long, value_delimiter = ',', required = true)]
        mu_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        c_offsets: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Provenance wrapper around every JSON payload.
#[derive(Serialize)]
struct Report<T: Serialize> {
    version: &'static str,
    argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    report: T,
}

/// Writes to stdout, treating a closed pipe as a normal exit.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(2);
    }
}

fn print_report<T: Serialize>(seed: Option<u64>, mu: Option<f64>, c: Option<f64>, payload: T) {
    let wrapped = Report {
        version: env!("CARGO_PKG_VERSION"),
        argv: std::env::args().collect(),
        seed,
        mu,
        c,
        report: payload,
    };
    let mut text = serde_json::to_string_pretty(&wrapped).expect("report serialization");
    text.push('\n');
    emit(&text);
}

fn resolve_c(mu: f64, c: Option<f64>, c_offset: Option<f64>) -> Result<f64, Error> {
    let p = derive_parameters(mu)?;
    let (h12, _) = critical_values(&p);
    match (c, c_offset) {
        (Some(c), None) => Ok(c),
        (None, Some(off)) => Ok(h12 - off),
        (None, None) => Err(Error::Domain("one of --c or --c-offset is required".into())),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn main() {
    if let Ok(threads) = std::env::var("HILL4BP_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("rayon pool configured once at startup");
            }
            _ => {
                eprintln!("HILL4BP_THREADS must be a positive integer");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Params {
            mu,
            table,
            mu_steps,
        } => {
            if table {
                if mu_steps < 2 {
                    return Err(Error::Domain("--mu-steps must be at least 2".into()));
                }
                emit("mu,d,lambda1,lambda2,a,b\n");
                for i in 0..mu_steps {
                    let mu = 0.5 * i as f64 / (mu_steps - 1) as f64;
                    let p = derive_parameters(mu)?;
                    emit(&format!(
                        "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                        p.mu, p.d, p.lambda1, p.lambda2, p.a, p.b
                    ));
                }
            } else {
                let mu = mu.expect("clap required_unless_present");
                let p = derive_parameters(mu)?;
                let (lo, hi) = rotation_diagonalization_check(mu)?;
                print_report(
                    None,
                    Some(mu),
                    None,
                    json!({
                        "parameters": p,
                        "rotation_eigenvalues": { "low": lo, "high": hi },
                    }),
                );
            }
            Ok(0)
        }
        Command::Lagrange { mu } => {
            let p = derive_parameters(mu)?;
            let (h12, h34) = critical_values(&p);
            let describe = |k: usize, q: hill4bp::nalgebra::Vector3<f64>| {
                let grad = potential_gradient(&p, q).expect("points off origin");
                json!({
                    "name": format!("L{}", k + 1),
                    "position": [q.x, q.y, q.z],
                    "grad_norm": grad.norm(),
                })
            };
            let points: Vec<serde_json::Value> = match lagrange_points(&p) {
                Ok(pts) => pts
                    .iter()
                    .enumerate()
                    .map(|(k, q)| describe(k, *q))
                    .collect(),
                Err(Error::Degenerate(_)) => collinear_points(&p)
                    .iter()
                    .enumerate()
                    .map(|(k, q)| describe(k, *q))
                    .collect(),
                Err(e) => return Err(e),
            };
            print_report(
                None,
                Some(mu),
                None,
                json!({
                    "points": points,
                    "critical_values": { "h12": h12, "h34": h34 },
                }),
            );
            Ok(0)
        }
        Command::HillRegion {
            mu,
            c,
            c_offset,
            grid,
            slice,
            contour,
        } => {
            let c = resolve_c(mu, c, c_offset)?;
            let p = derive_parameters(mu)?;
            let spec = GridSpec {
                lo: -3.0,
                hi: 3.0,
                n: grid,
                kind: GridKind::Planar { z: slice },
            };
            let census = component_census(&p, c, &spec)?;
            if let Some(path) = contour {
                let lines = zero_velocity_contour(&p, c, &spec)?;
                std::fs::write(&path, contour_csv(&lines))
                    .map_err(|e| Error::Domain(format!("cannot write {path}: {e}")))?;
            }
            print_report(None, Some(mu), Some(c), census.summary());
            Ok(0)
        }
        Command::ScanContact {
            mu,
            c,
            c_offset,
            n,
            seed,
            planar,
            dump,
        } => {
            let c = resolve_c(mu, c, c_offset)?;
            let p = derive_parameters(mu)?;
            let report = transversality_scan(&p, c, n, seed, planar)?;
            if let Some(path) = dump {
                let csv = contact_samples_csv(&p, c, n.min(100_000), seed, planar)?;
                std::fs::write(&path, csv)
                    .map_err(|e| Error::Domain(format!("cannot write {path}: {e}")))?;
            }
            let pass = report.passed();
            print_report(Some(seed), Some(mu), Some(c), report);
            Ok(if pass { 0 } else { 1 })
        }
        Command::ScanRegularized {
            mu,
            c,
            c_offset,
            n,
            seed,
            eps,
            dump,
        } => {
            let c = resolve_c(mu, c, c_offset)?;
            let p = derive_parameters(mu)?;
            let report = regularized_transversality_scan(&p, c, eps, n, seed)?;
            if let Some(path) = dump {
                let csv =
                    regularized_samples_csv(&p, c, report.extras["eps"], n.min(100_000), seed)?;
                std::fs::write(&path, csv)
                    .map_err(|e| Error::Domain(format!("cannot write {path}: {e}")))?;
            }
            let pass = report.passed();
            print_report(Some(seed), Some(mu), Some(c), report);
            Ok(if pass { 0 } else { 1 })
        }
        Command::Symmetry { mu, n, seed } => {
            let p = derive_parameters(mu)?;
            let mut rows = Vec::new();
            let mut all_pass = true;
            for inv in builtin_involutions() {
                let rep = verify_hamiltonian_invariance(&p, &inv, n, seed)?;
                all_pass &= rep.passed();
                rows.push(json!({
                    "name": inv.name,
                    "kind": inv.kind,
                    "planar_restriction": restrict_to_planar(&inv)?.name,
                    "max_rel_deviation": rep.extras["max_rel_deviation"],
                    "pass": rep.passed(),
                }));
            }
            // negative control: the swap lift must fail invariance
            let control = verify_hamiltonian_invariance(&p, &swap_xy_lift(), n, seed)?;
            all_pass &= !control.passed();
            print_report(
                Some(seed),
                Some(mu),
                None,
                json!({
                    "involutions": rows,
                    "closure_table": group_closure_table(),
                    "group": "Z2 x Z2 x Z2",
                    "swap_control_fails": !control.passed(),
                    "pass": all_pass,
                }),
            );
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::Integrate {
            mu,
            state,
            t,
            tol,
            regularized,
            c,
        } => {
            let p = derive_parameters(mu)?;
            let s0 = PhaseState::from_array(state.as_slice().try_into().map_err(|_| {
                Error::Domain(format!(
                    "--state needs six coordinates, got {}",
                    state.len()
                ))
            })?);
            if !s0.is_finite() {
                return Err(Error::Domain("--state must be finite".into()));
            }
            if regularized {
                let c =
                    c.ok_or_else(|| Error::Domain("--regularized integration needs --c".into()))?;
                let r0 = stereo_to_sphere(&switch_map(&s0));
                let traj = integrate_regularized(&p, c, &r0, t, tol)?;
                emit(&traj.to_csv());
            } else {
                let traj = integrate_physical(&p, &s0, t, tol)?;
                emit(&traj.to_csv());
            }
            Ok(0)
        }
        Command::VerifyAll {
            mu_list,
            c_offsets,
            n,
            seed,
        } => {
            let summary = verify::run_battery(&mu_list, &c_offsets, n, seed)?;
            let pass = summary.all_pass;
            print_report(Some(seed), None, None, summary);
            Ok(if pass { 0 } else { 1 })
        }
    }
}

/// Per-sample CSV for the contact scan: the state, the pairing and the
/// position-only lower bound.
fn contact_samples_csv(
    p: &hill4bp::ParameterSet,
    c: f64,
    n: u64,
    seed: u64,
    planar: bool,
) -> Result<String, Error> {
    use hill4bp::contact::{liouville_pairing, pairing_lower_bound, sample_level_set};
    let mut out = String::from("x,y,z,px,py,pz,dH_X,position_bound\n");
    for s in sample_level_set(p, c, n, seed, planar)? {
        let a = s.to_array();
        let pairing = liouville_pairing(p, &s)?;
        let bound = pairing_lower_bound(p, c, s.position())?;
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            a[0], a[1], a[2], a[3], a[4], a[5], pairing, bound
        ));
    }
    Ok(out)
}

/// Per-sample CSV for the regularized scan: coordinates, Q, the pairing
/// and the bound ingredients |f| and |eta|.
fn regularized_samples_csv(
    p: &hill4bp::ParameterSet,
    c: f64,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<String, Error> {
    use hill4bp::regularization::{
        fiber_factor, fiber_liouville_pairing, regularized_hamiltonian,
        sample_q_level_near_collision,
    };
    let mut out = String::from("xi0,xi1,xi2,xi3,eta0,eta1,eta2,eta3,Q,dQ_X,abs_f,abs_eta\n");
    for r in sample_q_level_near_collision(p, c, eps, n, seed)? {
        let a = r.to_array();
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7],
            regularized_hamiltonian(p, c, &r),
            fiber_liouville_pairing(p, c, &r),
            fiber_factor(p, c, &r).abs(),
            r.eta_norm(),
        ));
    }
    Ok(out)
}
