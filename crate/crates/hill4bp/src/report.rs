//! Inequality-scan reports and the deterministic parallel scan harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// What the `argmin` coordinates of a [`ScanReport`] describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgminKind {
    /// Six phase-space coordinates `(x, y, z, px, py, pz)`.
    Phase,
    /// Spherical configuration coordinates `(rho, theta, phi)`.
    Spherical,
    /// Cartesian position `(x, y, z)`.
    Position,
    /// Regularized coordinates `(xi0..xi3, eta0..eta3)`.
    Regularized,
}

/// Outcome of an inequality scan: the claim is that the scanned quantity
/// stays above the scan's stated tolerance, so `verdict` is `pass` iff
/// `min_value` clears it. The extremal witness is kept so the minimum can
/// be reproduced by re-evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub verdict: Verdict,
    pub min_value: f64,
    pub argmin_kind: ArgminKind,
    pub argmin: Vec<f64>,
    pub n_samples: u64,
    pub rng_seed: u64,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Which scanned quantity / lower bound this report certifies.
    pub bound_kind: String,
    /// Secondary minima and scan constants, keyed deterministically.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl ScanReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Fixed batch size for all scans. Batches are seeded independently from
/// (seed, batch index), so the sample stream never depends on how batches
/// are scheduled over threads.
pub(crate) const SCAN_BATCH: u64 = 8192;

/// Running minimum with a global sample index as deterministic tie-break.
#[derive(Debug, Clone)]
pub(crate) struct MinWitness {
    pub value: f64,
    pub index: u64,
    pub witness: Vec<f64>,
}

impl MinWitness {
    pub fn empty() -> Self {
        Self {
            value: f64::INFINITY,
            index: u64::MAX,
            witness: Vec::new(),
        }
    }

    pub fn observe(&mut self, value: f64, index: u64, witness: &[f64]) {
        if value < self.value || (value == self.value && index < self.index) {
            self.value = value;
            self.index = index;
            self.witness = witness.to_vec();
        }
    }

    pub fn merge(self, other: Self) -> Self {
        if other.value < self.value || (other.value == self.value && other.index < self.index) {
            other
        } else {
            self
        }
    }
}

/// Runs `n` samples split into fixed-size batches, in parallel, and folds
/// the per-batch results in batch order. `eval` receives the batch RNG and
/// the global index range; the result is independent of thread count.
pub(crate) fn run_scan_batches<B, F>(n: u64, seed: u64, eval: F) -> Vec<B>
where
    B: Send,
    F: Fn(ChaCha8Rng, u64, u64) -> B + Sync,
{
    let n_batches = n.div_ceil(SCAN_BATCH).max(1);
    (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch + 1);
            let start = batch * SCAN_BATCH;
            let count = SCAN_BATCH.min(n - start);
            eval(rng, start, count)
        })
        .collect()
}
