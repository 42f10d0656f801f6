//! Dormand–Prince 5(4) with FSAL, hard stops and a state-dependent step cap.
//!
//! The right-hand side receives `(t, y, t_left)` where `t_left` is the start of the current
//! step. Steps never cross a stop, so a piecewise-in-time field evaluated at `t_left` sees a
//! single smooth piece for the whole step, including the last stage at `t_left + h`.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Only the leading components enter the error norm; all when `None`.
    pub error_dims: Option<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 5_000_000,
            h_init: None,
            error_dims: None,
        }
    }
}

/// One accepted step with end slopes evaluated on the step's own piece.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> StepRecord<N> {
    /// Cubic Hermite interpolant.
    pub fn interp(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        if h <= 0.0 {
            return self.y0;
        }
        let s = ((t - self.t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i];
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub struct Solution<const N: usize> {
    pub steps: Vec<StepRecord<N>>,
    pub stats: Stats,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn err_norm<const N: usize>(e: &[f64; N], y0: &[f64; N], y1: &[f64; N], o: &Options) -> f64 {
    let m = o.error_dims.unwrap_or(N).clamp(1, N);
    let mut s = 0.0;
    for i in 0..m {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        let r = e[i] / sc;
        s += r * r;
    }
    (s / m as f64).sqrt()
}

fn initial_step<const N: usize, F>(rhs: &F, t0: f64, y0: &[f64; N], f0: &[f64; N], o: &Options, cap: f64) -> f64
where
    F: Fn(f64, &[f64; N], f64) -> [f64; N],
{
    let m = o.error_dims.unwrap_or(N).clamp(1, N);
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..m {
        let sc = o.atol + o.rtol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    d0 = (d0 / m as f64).sqrt();
    d1 = (d1 / m as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cap);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1, t0);
    let mut d2 = 0.0;
    for i in 0..m {
        let sc = o.atol + o.rtol * y0[i].abs();
        d2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    d2 = (d2 / m as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cap)
}

/// Integrates from `t0` to `t_end`. `stops` are times the integrator must land on exactly
/// (sorted or not; values outside `(t0, t_end)` are ignored). `cap(t, y)` bounds the next
/// step. The field is re-evaluated after every stop.
pub fn integrate<const N: usize, F, C>(
    rhs: F,
    cap: C,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    stops: &[f64],
    opts: &Options,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N], f64) -> [f64; N],
    C: Fn(f64, &[f64; N]) -> f64,
{
    integrate_until(rhs, cap, |_, _| false, t0, y0, t_end, stops, opts)
}

/// As [`integrate`], but also halts after the first accepted step whose end state
/// satisfies `halt`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_until<const N: usize, F, C, H>(
    rhs: F,
    cap: C,
    halt: H,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    stops: &[f64],
    opts: &Options,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N], f64) -> [f64; N],
    C: Fn(f64, &[f64; N]) -> f64,
    H: Fn(f64, &[f64; N]) -> bool,
{
    if halt(t0, &y0) {
        return Ok(Solution {
            steps: Vec::new(),
            stats: Stats::default(),
        });
    }
    let mut stops: Vec<f64> = stops.iter().copied().filter(|&s| s > t0 && s < t_end).collect();
    stops.push(t_end);
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stops.dedup();

    let mut stats = Stats::default();
    let mut steps = Vec::new();
    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y, t);
    stats.evaluations += 1;
    let mut h = match opts.h_init {
        Some(h) => h.min(cap(t, &y)),
        None => {
            stats.evaluations += 1;
            initial_step(&rhs, t, &y, &f, opts, cap(t, &y))
        }
    };
    let mut next_stop = 0usize;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudget {
                t,
                budget: opts.max_steps,
            });
        }
        let target = stops[next_stop];
        let mut hh = h.min(cap(t, &y));
        let mut hits_stop = false;
        if t + hh >= target || t + 1.0001 * hh >= target {
            hh = target - t;
            hits_stop = true;
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if hh < h_min && !hits_stop {
            return Err(Error::StepUnderflow { t, h: hh });
        }

        let tl = t;
        let k1 = f;
        let k2 = rhs(t + C2 * hh, &axpy(&y, hh, &[(A21, &k1)]), tl);
        let k3 = rhs(t + C3 * hh, &axpy(&y, hh, &[(A31, &k1), (A32, &k2)]), tl);
        let k4 = rhs(t + C4 * hh, &axpy(&y, hh, &[(A41, &k1), (A42, &k2), (A43, &k3)]), tl);
        let k5 = rhs(
            t + C5 * hh,
            &axpy(&y, hh, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            tl,
        );
        let k6 = rhs(
            t + hh,
            &axpy(&y, hh, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            tl,
        );
        let y1 = axpy(&y, hh, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + hh, &y1, tl);
        stats.evaluations += 6;

        let mut e = [0.0; N];
        for i in 0..N {
            e[i] = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = err_norm(&e, &y, &y1, opts);
        let finite = y1.iter().all(|v| v.is_finite()) && err.is_finite();

        if finite && err <= 1.0 {
            stats.accepted += 1;
            let t1 = if hits_stop { target } else { t + hh };
            steps.push(StepRecord {
                t0: t,
                t1,
                y0: y,
                y1,
                f0: k1,
                f1: k7,
            });
            t = t1;
            y = y1;
            if halt(t, &y) {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if hits_stop {
                next_stop += 1;
                if t < t_end {
                    f = rhs(t, &y, t);
                    stats.evaluations += 1;
                }
                // a stop truncates the step; do not let that shrink the next one
                h = h.max(hh * fac);
            } else {
                f = k7;
                h = hh * fac;
            }
        } else {
            stats.rejected += 1;
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = hh * fac;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok(Solution { steps, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = integrate(
            |_, y: &[f64; 1], _| [-y[0]],
            |_, _| f64::INFINITY,
            0.0,
            [1.0],
            2.0,
            &[],
            &Options {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        let last = sol.steps.last().unwrap();
        assert_eq!(last.t1, 2.0);
        assert!((last.y1[0] - (-2f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn lands_on_stops() {
        let stops = [0.3, 0.7, 1.1];
        let sol = integrate(
            |_, _: &[f64; 1], tl| [if tl < 0.7 { 1.0 } else { -1.0 }],
            |_, _| 10.0,
            0.0,
            [0.0],
            1.5,
            &stops,
            &Options::default(),
        )
        .unwrap();
        for s in stops {
            assert!(sol.steps.iter().any(|r| r.t1 == s));
        }
        // exact for piecewise constant fields
        let last = sol.steps.last().unwrap();
        assert!((last.y1[0] - (0.7 - 0.8)).abs() < 1e-13);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sol = integrate(
            |_, y: &[f64; 2], _| [y[1], -y[0]],
            |_, _| 0.05,
            0.0,
            [0.0, 1.0],
            3.0,
            &[],
            &Options {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        for r in &sol.steps {
            let tm = 0.5 * (r.t0 + r.t1);
            let y = r.interp(tm);
            assert!((y[0] - tm.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn cap_is_respected() {
        let sol = integrate(
            |_, _: &[f64; 1], _| [0.0],
            |_, _| 0.01,
            0.0,
            [0.0],
            1.0,
            &[],
            &Options::default(),
        )
        .unwrap();
        assert!(sol.steps.iter().all(|r| r.t1 - r.t0 <= 0.01 * (1.0 + 1e-12) + 1e-12));
    }

    #[test]
    fn budget_exhaustion_reported() {
        let r = integrate(
            |_, y: &[f64; 1], _| [-y[0]],
            |_, _| 1e-3,
            0.0,
            [1.0],
            10.0,
            &[],
            &Options {
                max_steps: 100,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::StepBudget { .. })));
    }
}
