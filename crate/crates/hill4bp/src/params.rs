//! Mass-ratio parameter derivation and the pre-rotation quadratic check.

use crate::dd::Dd;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Model constants derived from the mass ratio `mu` of the two primaries
/// at infinity.
///
/// `d = sqrt(1 - 3 mu + 3 mu^2)`, `lambda1 = (3/2)(1 - d)`,
/// `lambda2 = (3/2)(1 + d)`, `a = (1 - lambda2)/2`, `b = (1 - lambda1)/2`.
/// For `mu` in `[0, 1/2]`: `d` in `[1/2, 1]`, `lambda1` in `[0, 3/4]`,
/// `lambda2` in `[9/4, 3]`, `a` in `[-1, -5/8]`, `b` in `[1/8, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub mu: f64,
    pub d: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a: f64,
    pub b: f64,
}

/// Derives all model constants from `mu`.
///
/// `mu` outside `[0, 1/2]` is rejected; folding `mu -> 1 - mu` is the
/// caller's job so that reports stay unambiguous.
pub fn derive_parameters(mu: f64) -> Result<ParameterSet> {
    if !(0.0..=0.5).contains(&mu) {
        return Err(Error::Domain(format!("mu = {mu} outside [0, 1/2]")));
    }
    // 1 - 3 mu + 3 mu^2 = 1/4 + 3 (mu - 1/2)^2 avoids the cancellation
    // near mu = 1/3..1/2; likewise 1 - d = 3 mu (1 - mu) / (1 + d) avoids
    // it as mu -> 0, and b = (3d - 1)/4 is rewritten with
    // 9 d^2 - 1 = 5/4 + 27 (mu - 1/2)^2.
    let t = mu - 0.5;
    let d = (0.25 + 3.0 * t * t).sqrt();
    let lambda1 = 4.5 * mu * (1.0 - mu) / (1.0 + d);
    let lambda2 = 1.5 * (1.0 + d);
    let a = -0.25 * (1.0 + 3.0 * d);
    let b = (1.25 + 27.0 * t * t) / (4.0 * (3.0 * d + 1.0));
    Ok(ParameterSet {
        mu,
        d,
        lambda1,
        lambda2,
        a,
        b,
    })
}

/// Parameter set in double-double precision: `(d, lambda1, lambda2, a, b)`.
///
/// Independent route used by the acceptance tables; evaluates the closed
/// forms naively, which is safe at ~31 digits.
pub fn derive_parameters_dd(mu: f64) -> Result<[Dd; 5]> {
    if !(0.0..=0.5).contains(&mu) {
        return Err(Error::Domain(format!("mu = {mu} outside [0, 1/2]")));
    }
    let one = Dd::from_f64(1.0);
    let m = Dd::from_f64(mu);
    let d = (one - m.scale(3.0) + (m * m).scale(3.0)).sqrt();
    let lambda1 = (one - d).scale(1.5);
    let lambda2 = (one + d).scale(1.5);
    let a = (one - lambda2).scale(0.5);
    let b = (one - lambda1).scale(0.5);
    Ok([d, lambda1, lambda2, a, b])
}

/// Eigenvalues of the symmetric 2x2 block of the pre-rotation quadratic
/// form in `(x, y)`:
///
/// ```text
/// [ 1/8                  -(3 sqrt(3)/8)(1-2mu) ]
/// [ -(3 sqrt(3)/8)(1-2mu)          -5/8        ]
/// ```
///
/// Returns `(eig_low, eig_high)`; these must equal `(a, b)` of
/// [`derive_parameters`] since the rotated Hamiltonian diagonalizes the
/// same form.
pub fn rotation_diagonalization_check(mu: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.5).contains(&mu) {
        return Err(Error::Domain(format!("mu = {mu} outside [0, 1/2]")));
    }
    let off = -(3.0 * 3f64.sqrt() / 8.0) * (1.0 - 2.0 * mu);
    let m11 = 1.0 / 8.0;
    let m22 = -5.0 / 8.0;
    let mean = 0.5 * (m11 + m22);
    let disc = (0.25 * (m11 - m22) * (m11 - m22) + off * off).sqrt();
    Ok((mean - disc, mean + disc))
}
