//! Adaptive Dormand–Prince 5(4) integration that lands exactly on a sample
//! grid and lets the caller veto steps that break an invariant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MetricError;
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `0` selects `0.01 · |span|`.
    pub h0: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            h0: 0.0,
            h_min: 1e-12,
            max_steps: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub invariant_rejections: usize,
    pub min_step: f64,
    pub max_step: f64,
}

/// What the caller decided about a proposed step.
pub enum Veto {
    Accept,
    Reject,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Relative length of the probe step used to tell a chart exit from a stiff
/// failure when the step underflows.
const EDGE_PROBE: f64 = 1e-6;

fn is_chart_exit(e: &Error) -> bool {
    matches!(e, Error::Metric(MetricError::OutOfChart { .. }))
}

/// Integrates `dy/dt = f(t, y)` from `times[0]` through every entry of
/// `times` (monotone in either direction) and returns the state at each.
///
/// Stage evaluations that leave the chart shrink the step; if the step
/// underflows after such a rejection the integration stops with
/// [`Error::ChartExit`].
/// `veto` sees every error-accepted step and may reject it, which halves the
/// step.
pub fn integrate<T, F, V>(
    mut f: F,
    times: &[T],
    y0: &[T],
    opts: &OdeOptions,
    mut veto: V,
) -> Result<(Vec<Vec<T>>, StepStats)>
where
    T: Real,
    F: FnMut(T, &[T]) -> Result<Vec<T>>,
    V: FnMut(T, &[T]) -> Result<Veto>,
{
    let dim = y0.len();
    let mut out = vec![y0.to_vec()];
    let mut stats = StepStats {
        min_step: f64::INFINITY,
        ..Default::default()
    };
    if times.len() < 2 {
        return Ok((out, stats));
    }
    let span = to_f64(times[times.len() - 1] - times[0]);
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut h = if opts.h0 > 0.0 { opts.h0 } else { 0.01 * span.abs().max(1e-6) };
    let mut t = to_f64(times[0]);
    let mut y: Vec<T> = y0.to_vec();
    let mut k0 = f(times[0], &y)?;
    let mut steps = 0usize;
    // Set by a chart rejection, cleared by the next accepted step.
    let mut at_edge = false;

    for &target in &times[1..] {
        let target = to_f64(target);
        while (target - t) * dir > 1e-14 * span.abs().max(1.0) {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepFailure { t, h });
            }
            let remaining = (target - t).abs();
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let step = dir * hs;
            let attempt = dp_step(&mut f, t, &y, &k0, step).and_then(|(y5, err_parts, k7)| {
                let mut err = 0.0f64;
                for i in 0..dim {
                    let sc = opts.atol + opts.rtol * to_f64(y[i]).abs().max(to_f64(y5[i]).abs());
                    err = err.max((to_f64(err_parts[i]) / sc).abs());
                }
                if err > 1.0 {
                    return Ok((y5, k7, err, None));
                }
                let t_new = if last { target } else { t + step };
                let v = veto(lit(t_new), &y5)?;
                Ok((y5, k7, err, Some(v)))
            });
            match attempt {
                Ok((y5, k7, err, Some(Veto::Accept))) => {
                    t = if last { target } else { t + step };
                    at_edge = false;
                    y = y5;
                    k0 = k7;
                    stats.accepted += 1;
                    stats.min_step = stats.min_step.min(hs);
                    stats.max_step = stats.max_step.max(hs);
                    if !last {
                        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        h = hs * fac;
                    }
                }
                Ok((_, _, _, Some(Veto::Reject))) => {
                    stats.rejected += 1;
                    stats.invariant_rejections += 1;
                    h = hs * 0.5;
                }
                Ok((_, _, err, None)) => {
                    stats.rejected += 1;
                    h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                Err(e) if is_chart_exit(&e) => {
                    stats.rejected += 1;
                    at_edge = true;
                    h = hs * 0.5;
                }
                Err(e) => return Err(e),
            }
            if h < opts.h_min {
                if !at_edge {
                    // Step underflow right at the boundary: probe along the flow.
                    let dt = dir * EDGE_PROBE * span.abs().max(1.0);
                    let yp: Vec<T> = y.iter().zip(&k0).map(|(&a, &b)| a + lit::<T>(dt) * b).collect();
                    at_edge = matches!(f(lit(t + dt), &yp), Err(ref e) if is_chart_exit(e));
                }
                if at_edge {
                    return Err(Error::ChartExit {
                        t,
                        x: y.iter().map(|&v| to_f64(v)).collect(),
                    });
                }
                return Err(Error::StepFailure { t, h });
            }
        }
        t = target;
        out.push(y.clone());
    }
    if stats.min_step == f64::INFINITY {
        stats.min_step = 0.0;
    }
    Ok((out, stats))
}

type StepOut<T> = (Vec<T>, Vec<T>, Vec<T>);

fn dp_step<T: Real, F>(f: &mut F, t: f64, y: &[T], k0: &[T], h: f64) -> Result<StepOut<T>>
where
    F: FnMut(T, &[T]) -> Result<Vec<T>>,
{
    let dim = y.len();
    let mut k: Vec<Vec<T>> = Vec::with_capacity(7);
    k.push(k0.to_vec());
    for s in 1..7 {
        let ys: Vec<T> = (0..dim)
            .map(|i| {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        acc = acc + lit::<T>(h * A[s][j]) * kj[i];
                    }
                }
                acc
            })
            .collect();
        k.push(f(lit(t + C[s] * h), &ys)?);
    }
    let mut y5 = vec![T::zero(); dim];
    let mut err = vec![T::zero(); dim];
    for i in 0..dim {
        let mut a5 = T::zero();
        let mut e = T::zero();
        for s in 0..7 {
            a5 = a5 + lit::<T>(B5[s]) * k[s][i];
            e = e + lit::<T>(B5[s] - B4[s]) * k[s][i];
        }
        y5[i] = y[i] + lit::<T>(h) * a5;
        err[i] = lit::<T>(h) * e;
    }
    let k7 = k.pop().expect("seven stages");
    Ok((y5, err, k7))
}
