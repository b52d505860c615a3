//! Embedded Dormand-Prince 5(4) integrator with step clamping, optional
//! per-step state projection and a stop predicate.
//!
//! Adaptive error control rather than a symplectic scheme: step
//! adaptation matters more near close approaches at this scale, and the
//! conserved quantities are monitored by the callers instead of being
//! structurally enforced.

use crate::error::{Error, Result};

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights equal the last A row (FSAL); fourth-order weights:
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

// Conservative step safety: keeps the realized local error a few times
// below the nominal tolerance, which the long-run conservation
// diagnostics rely on.
const SAFETY: f64 = 0.7;

pub type Projection<'a, const N: usize> = &'a dyn Fn(&mut [f64; N]);
pub type StopPredicate<'a, const N: usize> = &'a dyn Fn(f64, &[f64; N]) -> bool;

pub struct SolveOptions<'a, const N: usize> {
    /// When given, the solution is recorded exactly at these times (the
    /// step size is clamped to land on them); otherwise every accepted
    /// step is recorded. Times must be sorted in integration direction.
    pub t_eval: Option<&'a [f64]>,
    /// Applied to the state after every accepted step (constraint
    /// stabilization).
    pub projection: Option<Projection<'a, N>>,
    /// Checked after every accepted step; returning true stops the
    /// integration early (the triggering state is recorded).
    pub stop_when: Option<StopPredicate<'a, N>>,
    pub h_init: Option<f64>,
}

impl<const N: usize> Default for SolveOptions<'_, N> {
    fn default() -> Self {
        Self {
            t_eval: None,
            projection: None,
            stop_when: None,
            h_init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    /// True when `stop_when` ended the run before `t_final`.
    pub stopped: bool,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (
            *self.times.last().expect("solution never empty"),
            *self.states.last().expect("solution never empty"),
        )
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_final` (either
/// direction) with relative/absolute tolerance `rtol`/`atol`.
pub fn solve_dopri5<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    y0: [f64; N],
    t_final: f64,
    rtol: f64,
    atol: f64,
    opts: SolveOptions<'_, N>,
) -> Result<Solution<N>> {
    let span = t_final - t0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut sol = Solution {
        times: Vec::new(),
        states: Vec::new(),
        stopped: false,
        n_accepted: 0,
        n_rejected: 0,
    };
    let mut eval_iter = opts.t_eval.map(|ts| ts.iter().copied().peekable());
    let record_steps = opts.t_eval.is_none();
    // record t0 when requested
    if let Some(it) = eval_iter.as_mut() {
        while let Some(&te) = it.peek() {
            if (te - t0) * dir <= 1e-14 * t0.abs().max(1.0) {
                sol.times.push(te);
                sol.states.push(y0);
                it.next();
            } else {
                break;
            }
        }
    } else {
        sol.times.push(t0);
        sol.states.push(y0);
    }
    if span == 0.0 {
        return Ok(sol);
    }

    let mut t = t0;
    let mut y = y0;
    let t_scale = t0.abs().max(t_final.abs()).max(1.0);
    let mut h = opts
        .h_init
        .unwrap_or_else(|| (span.abs() / 100.0).min(0.05).max(2e-14 * t_scale))
        * dir;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y)?;

    loop {
        // a remaining gap at rounding scale counts as arrival
        if (t_final - t) * dir <= 1e-14 * t_scale {
            break;
        }
        // clamp onto t_final and the next requested output time; snap the
        // clock to the clamp target on acceptance so no 1-ulp remainder
        // can underflow the next step
        let mut h_step = h;
        let mut snap_to = None;
        if (t + h_step - t_final) * dir > 0.0 {
            h_step = t_final - t;
            snap_to = Some(t_final);
        }
        let mut lands_on_eval = false;
        if let Some(it) = eval_iter.as_mut() {
            if let Some(&te) = it.peek() {
                if (t + h_step - te) * dir >= 0.0 {
                    h_step = te - t;
                    snap_to = Some(te);
                    lands_on_eval = true;
                }
            }
        }
        if h_step.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { h: h_step, t });
        }

        // stages
        for stage in 1..7 {
            let mut ys = y;
            for (i, ysi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (s, ks) in k.iter().enumerate().take(stage) {
                    acc += A[stage][s] * ks[i];
                }
                *ysi += h_step * acc;
            }
            k[stage] = f(t + C[stage] * h_step, &ys)?;
        }
        // 5th-order solution is the stage-7 state; error vs 4th order
        let mut y5 = y;
        for (i, yi) in y5.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, ks) in k.iter().enumerate().take(6) {
                acc += A[6][s] * ks[i];
            }
            *yi += h_step * acc;
        }
        let mut err_norm_sq = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += (A[6].get(s).copied().unwrap_or(0.0) - B4[s]) * ks[i];
            }
            e *= h_step;
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err_norm_sq += (e / scale) * (e / scale);
        }
        let err_norm = (err_norm_sq / N as f64).sqrt();
        // a non-finite estimate (overflowed stage) must reject the step
        let err_norm = if err_norm.is_finite() { err_norm } else { f64::INFINITY };

        if err_norm <= 1.0 {
            // accept
            t = snap_to.unwrap_or(t + h_step);
            y = y5;
            if let Some(proj) = opts.projection {
                proj(&mut y);
            }
            sol.n_accepted += 1;
            if lands_on_eval {
                if let Some(it) = eval_iter.as_mut() {
                    sol.times.push(t);
                    sol.states.push(y);
                    it.next();
                }
            } else if record_steps {
                sol.times.push(t);
                sol.states.push(y);
            }
            if let Some(stop) = opts.stop_when {
                if stop(t, &y) {
                    if !record_steps && !lands_on_eval {
                        sol.times.push(t);
                        sol.states.push(y);
                    }
                    sol.stopped = true;
                    return Ok(sol);
                }
            }
            k[0] = f(t, &y)?;
            let factor = if err_norm > 0.0 {
                SAFETY * err_norm.powf(-0.2)
            } else {
                5.0
            };
            h = h_step * factor.clamp(0.2, 5.0);
        } else {
            sol.n_rejected += 1;
            let factor = (SAFETY * err_norm.powf(-0.2)).clamp(0.2, 1.0);
            h = h_step * factor;
        }
    }
    // record any requested times sitting within rounding of the endpoint
    if let Some(it) = eval_iter.as_mut() {
        while let Some(&te) = it.peek() {
            if (te - t_final).abs() <= 1e-12 * t_scale {
                sol.times.push(te);
                sol.states.push(y);
                it.next();
            } else {
                break;
            }
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let sol = solve_dopri5(
            |_t, y: &[f64; 1]| Ok([-y[0]]),
            0.0,
            [1.0],
            2.0,
            1e-10,
            1e-10,
            SolveOptions::default(),
        )
        .unwrap();
        let (t, y) = sol.last();
        assert_eq!(t, 2.0);
        assert_relative_eq!(y[0], (-2.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn harmonic_oscillator_at_eval_points() {
        let ts = [0.0, 0.5, 1.0, 2.0, 3.0];
        let sol = solve_dopri5(
            |_t, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            3.0,
            1e-11,
            1e-11,
            SolveOptions {
                t_eval: Some(&ts),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sol.times, ts.to_vec());
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert_relative_eq!(y[0], t.cos(), epsilon = 1e-9);
            assert_relative_eq!(y[1], -t.sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn backward_integration() {
        let sol = solve_dopri5(
            |_t, y: &[f64; 1]| Ok([y[0]]),
            0.0,
            [1.0],
            -1.0,
            1e-10,
            1e-10,
            SolveOptions::default(),
        )
        .unwrap();
        let (t, y) = sol.last();
        assert_eq!(t, -1.0);
        assert_relative_eq!(y[0], (-1.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn stop_predicate_halts_early() {
        let stop = |_t: f64, y: &[f64; 1]| y[0] > 10.0;
        let sol = solve_dopri5(
            |_t, y: &[f64; 1]| Ok([y[0]]),
            0.0,
            [1.0],
            10.0,
            1e-9,
            1e-9,
            SolveOptions {
                stop_when: Some(&stop),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sol.stopped);
        assert!(sol.last().0 < 10.0);
    }

    #[test]
    fn projection_is_applied() {
        // keep the state on the unit circle while rotating
        let proj = |y: &mut [f64; 2]| {
            let n = (y[0] * y[0] + y[1] * y[1]).sqrt();
            y[0] /= n;
            y[1] /= n;
        };
        let sol = solve_dopri5(
            |_t, y: &[f64; 2]| Ok([-y[1], y[0]]),
            0.0,
            [1.0, 0.0],
            50.0,
            1e-6,
            1e-6,
            SolveOptions {
                projection: Some(&proj),
                ..Default::default()
            },
        )
        .unwrap();
        for y in &sol.states {
            assert_relative_eq!(y[0] * y[0] + y[1] * y[1], 1.0, epsilon = 1e-12);
        }
    }
}
