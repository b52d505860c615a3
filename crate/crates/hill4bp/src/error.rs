//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model evaluation, scans and integration.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An input parameter is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation requested at (or numerically below) the collision singularity.
    #[error("singularity: |position| = {r:.3e} below guard radius {r_min:.1e}")]
    Singularity { r: f64, r_min: f64 },

    /// A quantity that the operation needs is degenerate (e.g. L3/L4 at mu = 0).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// An iterative solver did not converge.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Stereographic chart evaluated at the North pole fiber.
    #[error("north pole: 1 - xi0 = {one_minus_xi0:.3e} below 1e-14")]
    NorthPole { one_minus_xi0: f64 },

    /// Rejection sampling failed to find a point in the allowed region.
    #[error("empty region: rejection sampling failed after {attempts} attempts")]
    EmptyRegion { attempts: u64 },

    /// The fiber-radius root-find found no root in the bracket.
    #[error("root find failed: no positive root of |eta| f = 1 in ({lo:.1e}, {hi:.1e})")]
    RootFind { lo: f64, hi: f64 },

    /// The regularized integrator drifted off the Q = 1/2 level set.
    #[error("drift: |Q - 1/2| = {drift:.3e} exceeded {limit:.1e} at s = {s:.6}")]
    Drift { drift: f64, limit: f64, s: f64 },

    /// Adaptive step size underflowed.
    #[error("step failure: step size {h:.3e} underflowed at t = {t:.6}")]
    StepFailure { h: f64, t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
