//! The penalized controlled ODE `Ẋ = f(X, α) − ∇d(X)/ε` and the reflection term
//! `k(t) = (1/ε)∫_0^t ∇d(X)`.

pub mod control;
pub mod estimates;
pub mod rk;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{invariance_threshold, penalty, penalty_gradient, PlanePoint};

pub use control::ControlSchedule;
pub use estimates::{check_apriori_estimates, AprioriReport};

/// Absolute stability limit of the explicit pair on the negative real axis is about 3.3;
/// steps are kept below this multiple of `1/λ_max`.
const STABILITY_FACTOR: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step cap outside the layer, as a multiple of ε.
    pub max_step_factor: f64,
    pub horizon: f64,
    /// When set, the integrator lands exactly on every multiple of this spacing.
    #[serde(default)]
    pub sample_dt: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    20_000_000
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step_factor: 0.5,
            horizon: 1.0,
            sample_dt: None,
            max_steps: default_max_steps(),
        }
    }
}

impl IntegratorConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.max_step_factor > 0.0 && self.max_step_factor <= 1.0) {
            return bad("max_step_factor must lie in (0, 1]");
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad("horizon must be positive and finite");
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0) {
                return bad("sample_dt must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Sampled solution on the accepted step grid, with Hermite dense output in between.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub eps: f64,
    pub x0: PlanePoint,
    pub times: Vec<f64>,
    pub states: Vec<PlanePoint>,
    /// `k = x + ∫f − X`.
    pub k_states: Vec<PlanePoint>,
    /// `k` by direct quadrature of `∇d(X)/ε`, kept as a cross-check.
    pub k_direct: Vec<PlanePoint>,
    /// `∫_0^t f(X, α)`.
    pub drift_integral: Vec<PlanePoint>,
    /// Slopes `Ẋ` at the two ends of every interval, on that interval's control piece.
    pub slopes: Vec<(PlanePoint, PlanePoint)>,
    pub control: ControlSchedule,
    pub config: IntegratorConfig,
    pub stats: IntegratorStats,
}

/// Bounded field `f(x, a)`; the eikonal case is `f(x, a) = a`.
pub trait Field: Sync {
    fn eval(&self, x: PlanePoint, a: PlanePoint) -> PlanePoint;
}

/// `f(x, a) = a`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Eikonal;

impl Field for Eikonal {
    fn eval(&self, _x: PlanePoint, a: PlanePoint) -> PlanePoint {
        a
    }
}

impl<F: Fn(PlanePoint, PlanePoint) -> PlanePoint + Sync> Field for F {
    fn eval(&self, x: PlanePoint, a: PlanePoint) -> PlanePoint {
        self(x, a)
    }
}

/// Largest eigenvalue of the Hessian of `d`.
fn hessian_spectral_radius(p: PlanePoint) -> f64 {
    let r2 = p.x1 * p.x1 + p.x2 * p.x2;
    let q = p.x1 * p.x2;
    r2 + (r2 * r2 + 12.0 * q * q).sqrt()
}

/// Integrates the eikonal system `Ẋ = α − ∇d(X)/ε` on `[0, horizon]`.
pub fn integrate_perturbed(
    x: PlanePoint,
    alpha: &ControlSchedule,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    integrate_perturbed_with(&Eikonal, x, alpha, eps, cfg)
}

/// Same as [`integrate_perturbed`] for a general bounded field. `alpha.f_inf()` must bound
/// `|f|` for the step cap and the layer width to be meaningful.
pub fn integrate_perturbed_with<F: Field + ?Sized>(
    field: &F,
    x: PlanePoint,
    alpha: &ControlSchedule,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput("initial point must be finite".into()));
    }
    cfg.validate()?;

    let inv_eps = 1.0 / eps;
    let layer = invariance_threshold(alpha.f_inf(), eps);
    let outer_cap = cfg.max_step_factor * eps;

    // y = (X, ∫f, (1/ε)∫∇d)
    let rhs = |_t: f64, y: &[f64; 6], tl: f64| -> [f64; 6] {
        let p = PlanePoint::new(y[0], y[1]);
        let a = alpha.eval(tl);
        let f = field.eval(p, a);
        let g = penalty_gradient(p) * inv_eps;
        [f.x1 - g.x1, f.x2 - g.x2, f.x1, f.x2, g.x1, g.x2]
    };
    let cap = |_t: f64, y: &[f64; 6]| -> f64 {
        let p = PlanePoint::new(y[0], y[1]);
        let stab = STABILITY_FACTOR * eps / (hessian_spectral_radius(p) + f64::MIN_POSITIVE);
        if penalty(p) > layer {
            stab.min(outer_cap)
        } else {
            stab
        }
    };

    let mut stops = alpha.switch_times(cfg.horizon);
    if let Some(dt) = cfg.sample_dt {
        let n = (cfg.horizon / dt).floor() as usize;
        stops.extend((1..=n).map(|i| i as f64 * dt));
    }
    let opts = rk::Options {
        rtol: cfg.rel_tol,
        atol: cfg.abs_tol,
        max_steps: cfg.max_steps,
        h_init: None,
        error_dims: Some(2),
    };
    let sol = rk::integrate(rhs, cap, 0.0, [x.x1, x.x2, 0.0, 0.0, 0.0, 0.0], cfg.horizon, &stops, &opts)?;

    let n = sol.steps.len() + 1;
    let mut rec = TrajectoryRecord {
        eps,
        x0: x,
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        k_states: Vec::with_capacity(n),
        k_direct: Vec::with_capacity(n),
        drift_integral: Vec::with_capacity(n),
        slopes: Vec::with_capacity(n - 1),
        control: alpha.clone(),
        config: *cfg,
        stats: IntegratorStats {
            accepted: sol.stats.accepted,
            rejected: sol.stats.rejected,
            evaluations: sol.stats.evaluations,
        },
    };
    let mut push = |t: f64, y: &[f64; 6]| {
        let p = PlanePoint::new(y[0], y[1]);
        let fi = PlanePoint::new(y[2], y[3]);
        rec.times.push(t);
        rec.states.push(p);
        rec.drift_integral.push(fi);
        rec.k_states.push(x + fi - p);
        rec.k_direct.push(PlanePoint::new(y[4], y[5]));
    };
    push(0.0, &[x.x1, x.x2, 0.0, 0.0, 0.0, 0.0]);
    for s in &sol.steps {
        push(s.t1, &s.y1);
    }
    rec.k_states[0] = PlanePoint::ORIGIN;
    rec.slopes = sol
        .steps
        .iter()
        .map(|s| (PlanePoint::new(s.f0[0], s.f0[1]), PlanePoint::new(s.f1[0], s.f1[1])))
        .collect();
    Ok(rec)
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn f_inf(&self) -> f64 {
        self.control.f_inf()
    }

    /// Interval index `i` with `times[i] <= t <= times[i+1]`.
    fn interval(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.times.len().saturating_sub(2))
    }

    /// Cubic Hermite interpolation of `X` between accepted steps; exact at nodes.
    pub fn state_at(&self, t: f64) -> PlanePoint {
        if self.times.len() == 1 {
            return self.states[0];
        }
        let t = t.clamp(0.0, self.horizon());
        let i = self.interval(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        if t == t0 {
            return self.states[i];
        }
        if t == t1 {
            return self.states[i + 1];
        }
        let h = t1 - t0;
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let (f0, f1) = self.slopes[i];
        self.states[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + f0 * (h * (s3 - 2.0 * s2 + s))
            + self.states[i + 1] * (-2.0 * s3 + 3.0 * s2)
            + f1 * (h * (s3 - s2))
    }

    /// `k(t)`; exact rearrangement in the eikonal case, interpolated otherwise.
    pub fn k_at(&self, t: f64) -> PlanePoint {
        let t = t.clamp(0.0, self.horizon());
        if t == 0.0 {
            return PlanePoint::ORIGIN;
        }
        let i = self.interval(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        let fi = self.drift_integral[i] * (1.0 - w) + self.drift_integral[i + 1] * w;
        self.x0 + fi - self.state_at(t)
    }

    /// Right-derivative `Ẋ` at node `i`.
    pub fn velocity(&self, i: usize) -> PlanePoint {
        if i < self.slopes.len() {
            self.slopes[i].0
        } else {
            self.slopes.last().map(|s| s.1).unwrap_or_default()
        }
    }

    pub fn penalties(&self) -> Vec<f64> {
        self.states.iter().map(|&p| penalty(p)).collect()
    }

    /// Largest `|X(t)| − (|x| + √2 f_inf t)` over the samples; nonpositive when the growth
    /// bound holds.
    pub fn growth_bound_excess(&self) -> f64 {
        let r0 = self.x0.norm();
        let c = std::f64::consts::SQRT_2 * self.f_inf();
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, p)| p.norm() - (r0 + c * t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|X + k − x − ∫f|` over the samples using the quadrature `k`.
    pub fn skorokhod_residual(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.k_direct)
            .zip(&self.drift_integral)
            .map(|((&p, &k), &fi)| (p + k - self.x0 - fi).norm())
            .fold(0.0, f64::max)
    }

    /// Uniform resampling with `n + 1` points on `[0, horizon]`.
    pub fn resample(&self, n: usize) -> Vec<(f64, PlanePoint)> {
        let h = self.horizon();
        (0..=n)
            .map(|i| {
                let t = h * i as f64 / n as f64;
                (t, self.state_at(t))
            })
            .collect()
    }

    /// Writes `t,x1,x2,k1,k2` rows at every node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x1,x2,k1,k2")?;
        for i in 0..self.times.len() {
            let (p, k) = (self.states[i], self.k_states[i]);
            writeln!(w, "{},{},{},{},{}", self.times[i], p.x1, p.x2, k.x1, k.x2)?;
        }
        Ok(())
    }

    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "eps": self.eps,
            "x0": [self.x0.x1, self.x0.x2],
            "control": self.control,
            "config": self.config,
            "stats": self.stats,
            "samples": self.times.len(),
        })
    }
}

/// First time with `d(X(t)) <= lam`, resolved on the accepted-step grid and refined by
/// bisection on the dense output. `None` if the level is not reached within the horizon.
pub fn entry_time(traj: &TrajectoryRecord, lam: f64) -> Option<f64> {
    let i = traj.states.iter().position(|&p| penalty(p) <= lam)?;
    if i == 0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (traj.times[i - 1], traj.times[i]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if penalty(traj.state_at(mid)) <= lam {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// First time the sampled path meets `pred`, refined by bisection on the dense output.
pub fn first_time(traj: &TrajectoryRecord, pred: impl Fn(PlanePoint) -> bool) -> Option<f64> {
    let i = traj.states.iter().position(|&p| pred(p))?;
    if i == 0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (traj.times[i - 1], traj.times[i]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(traj.state_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Upper bound `4 d(x)^(1/4) ε^(1−γ)` on the entry time into `Z(ε^(4γ/3))`, valid for
/// `ε <= (4 f_inf / 7)^(−1/(1−γ))`.
pub fn entry_bound_gamma(x: PlanePoint, eps: f64, gamma: f64) -> f64 {
    4.0 * penalty(x).powf(0.25) * eps.powf(1.0 - gamma)
}

/// Whether `ε` is small enough for [`entry_bound_gamma`] to apply.
pub fn entry_bound_gamma_applies(eps: f64, gamma: f64, f_inf: f64) -> bool {
    f_inf == 0.0 || eps <= (4.0 * f_inf / 7.0).powf(-1.0 / (1.0 - gamma))
}

/// Constant `C` of the integral estimate `(1/ε)∫d <= C (t2−t1) + ¼(√d(t1) − √d(t2))`.
pub fn integral_estimate_constant(x: PlanePoint, f_inf: f64, horizon: f64) -> f64 {
    (x.norm() + f_inf * horizon) * f_inf * std::f64::consts::SQRT_2
}

/// Constant `C` in `t(λ) <= C ε / λ` on `[0, horizon]`.
pub fn reach_constant(x: PlanePoint, f_inf: f64, horizon: f64) -> f64 {
    integral_estimate_constant(x, f_inf, horizon) * horizon + 0.25 * penalty(x).sqrt()
}

/// Entry time into `Z(lam)` followed by the largest later excursion `max d / lam`, taken
/// over the nodes and the dense-output midpoints; `None` if the level is never reached.
pub fn invariance_excursion(traj: &TrajectoryRecord, lam: f64) -> Option<(f64, f64)> {
    let i = traj.states.iter().position(|&p| penalty(p) <= lam)?;
    let nodes = traj.states[i..].iter().map(|&p| penalty(p));
    let mids = traj.times[i..]
        .windows(2)
        .map(|w| penalty(traj.state_at(0.5 * (w[0] + w[1]))));
    let worst = nodes.chain(mids).map(|d| d / lam).fold(0.0, f64::max);
    Some((traj.times[i], worst))
}
