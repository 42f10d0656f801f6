//! `V^ε → V̄∘φ_d` at desk scale: sup errors over an ε ladder, the three comparison
//! inequalities at random probes, and the Lipschitz constant of `V^ε` on `Γ`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::rk;
use crate::error::{Error, Result};
use crate::geometry::{penalty, penalty_gradient, project_to_network, Branch, PlanePoint};

use super::cost::{discounted_integral, ValueProblem};
use super::grid2d::{solve_value_eps, GridSpec, GridValueFunction};
use super::network::{solve_value_network, EdgeGridSpec, EdgeValueFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceOptions {
    pub probes: usize,
    pub seed: u64,
    /// Absolute slack for the comparison inequalities; `5 h` when `None`.
    pub slack: Option<f64>,
    /// Network spacing as a fraction of the planar spacing.
    pub network_refine: usize,
    /// Solve the ε values concurrently.
    pub parallel: bool,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            probes: 100,
            seed: 7,
            slack: None,
            network_refine: 4,
            parallel: true,
        }
    }
}

/// Comparison margins at one probe; each should be nonnegative up to the slack.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeMargins {
    pub x: PlanePoint,
    pub xbar: PlanePoint,
    /// `V^ε(x) − V̄(x̄)`; its negative part is the empirical modulus.
    pub lower_gap: f64,
    /// `V̄(x) − V^ε(x̄)`.
    pub network_margin: f64,
    /// `∫_0^τ e^(−λt) ℓ(Y) + e^(−λτ) V^ε(x̄) − V^ε(x)` along the accelerated flow `Y`.
    pub return_margin: f64,
    /// Time `τ^ε` for the accelerated flow to reach `x̄`.
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub sup_error: f64,
    pub sup_error_at: PlanePoint,
    /// `max (V̄(x̄) − V^ε(x))⁺` over the probes.
    pub modulus: f64,
    pub min_network_margin: f64,
    pub min_return_margin: f64,
    /// `max τ^ε / ε^(1/4)` over the probes.
    pub tau_ratio: f64,
    pub lipschitz_on_network: f64,
    pub max_abs: f64,
    pub iterations: usize,
    pub margins: Vec<ProbeMargins>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzFit {
    pub per_eps: Vec<f64>,
    /// Single constant covering every ε.
    pub fitted: f64,
    /// `max / min` across ε.
    pub spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub eps: Vec<f64>,
    pub sup_error: Vec<f64>,
    pub chain_margins: Vec<EpsRow>,
    pub lipschitz_fit: LipschitzFit,
    pub slack: f64,
    pub value_bound: f64,
    /// Sup errors strictly decrease along the ladder.
    pub monotone: bool,
    /// Every comparison margin is at least `−slack`.
    pub margins_ok: bool,
    pub network_junction_value: f64,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.margins_ok
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Accelerated flow `Ẏ = −∇d/|∇d| − ∇d/ε` from `x` until `d(Y)` vanishes to round-off;
/// returns `τ` and `∫_0^τ e^(−λt) ℓ(Y)`.
fn accelerated_return(prob: &ValueProblem, x: PlanePoint, eps: f64) -> Result<(f64, f64)> {
    const STOP: f64 = 1e-18;
    if penalty(x) < STOP {
        return Ok((0.0, 0.0));
    }
    let rhs = |_t: f64, y: &[f64; 2], _tl: f64| {
        let g = penalty_gradient(PlanePoint::new(y[0], y[1]));
        let n = g.norm();
        if n == 0.0 {
            return [0.0, 0.0];
        }
        [-g.x1 / n - g.x1 / eps, -g.x2 / n - g.x2 / eps]
    };
    let cap = |_t: f64, y: &[f64; 2]| {
        let (a, b) = (y[0], y[1]);
        let r2 = a * a + b * b;
        let lam = r2 + (r2 * r2 + 12.0 * a * a * b * b).sqrt();
        2.5 * eps / (lam + f64::MIN_POSITIVE)
    };
    let halt = |_t: f64, y: &[f64; 2]| penalty(PlanePoint::new(y[0], y[1])) < STOP;
    let opts = rk::Options {
        rtol: 1e-9,
        atol: 1e-12,
        max_steps: 200_000,
        ..rk::Options::default()
    };
    let sol = rk::integrate_until(rhs, cap, halt, 0.0, [x.x1, x.x2], 100.0, &[], &opts)?;
    let tau = sol.steps.last().map_or(0.0, |s| s.t1);
    let breaks: Vec<f64> = sol.steps.iter().map(|s| s.t1).collect();
    let state = |t: f64| {
        let i = sol.steps.partition_point(|s| s.t1 < t).min(sol.steps.len() - 1);
        let y = sol.steps[i].interp(t);
        PlanePoint::new(y[0], y[1])
    };
    let run = discounted_integral(&breaks, tau, prob.lambda, |t| prob.cost.eval_state(state(t)));
    Ok((tau, run))
}

/// Lipschitz quotient of `V^ε` between consecutive points spaced `h` along the axes, within
/// `reach` of `O`.
fn lipschitz_on_axes(v: &GridValueFunction, reach: f64) -> f64 {
    let m = (reach / v.h).floor() as usize;
    let mut l: f64 = 0.0;
    for b in Branch::EDGES {
        let e = b.unit();
        for j in 0..m {
            let a = v.eval(e * (j as f64 * v.h));
            let c = v.eval(e * ((j + 1) as f64 * v.h));
            l = l.max((c - a).abs() / v.h);
        }
    }
    l
}

fn probe_nodes(v: &GridValueFunction, spec: &GridSpec, n: usize, seed: u64) -> Vec<PlanePoint> {
    let nodes = v.nodes_in(&spec.region);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n.min(nodes.len()))
        .map(|_| {
            let (i1, i2) = nodes[rng.gen_range(0..nodes.len())];
            v.node(i1, i2)
        })
        .collect()
}

fn study_row(
    prob: &ValueProblem,
    eps: f64,
    spec: &GridSpec,
    net: &EdgeValueFunction,
    opts: &ConvergenceOptions,
) -> Result<EpsRow> {
    let v = solve_value_eps(prob, eps, spec)?;
    let mut sup_error = 0.0;
    let mut sup_error_at = PlanePoint::ORIGIN;
    for (i1, i2) in v.nodes_in(&spec.region) {
        let x = v.node(i1, i2);
        let err = (v.at(i1, i2) - net.eval(project_to_network(x))).abs();
        if err > sup_error {
            sup_error = err;
            sup_error_at = x;
        }
    }
    let mut margins = Vec::with_capacity(opts.probes);
    for x in probe_nodes(&v, spec, opts.probes, opts.seed) {
        let xbar_n = project_to_network(x);
        let xbar = xbar_n.to_plane();
        let vbar = net.eval(xbar_n);
        let ve_x = v.eval(x);
        let ve_xbar = v.eval(xbar);
        let (tau, run) = accelerated_return(prob, x, eps)?;
        margins.push(ProbeMargins {
            x,
            xbar,
            lower_gap: ve_x - vbar,
            network_margin: vbar - ve_xbar,
            return_margin: run + (-prob.lambda * tau).exp() * ve_xbar - ve_x,
            tau,
        });
    }
    let fold_min = |f: fn(&ProbeMargins) -> f64| margins.iter().map(f).fold(f64::INFINITY, f64::min);
    let reach = spec.region.x1_max.min(-spec.region.x1_min).min(spec.region.x2_max).min(-spec.region.x2_min);
    Ok(EpsRow {
        eps,
        sup_error,
        sup_error_at,
        modulus: margins.iter().map(|m| (-m.lower_gap).max(0.0)).fold(0.0, f64::max),
        min_network_margin: fold_min(|m| m.network_margin),
        min_return_margin: fold_min(|m| m.return_margin),
        tau_ratio: margins.iter().map(|m| m.tau / eps.powf(0.25)).fold(0.0, f64::max),
        lipschitz_on_network: lipschitz_on_axes(&v, reach.max(0.0)),
        max_abs: v.max_abs(),
        iterations: v.stats.iterations,
        margins,
    })
}

/// Runs the ε ladder `eps` (largest first) on the planar grid `spec`.
pub fn convergence_study(
    prob: &ValueProblem,
    eps: &[f64],
    spec: &GridSpec,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    prob.require_eikonal()?;
    spec.validate()?;
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("eps ladder must be nonempty and positive".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps ladder must be strictly decreasing".into()));
    }
    let net_spec = EdgeGridSpec {
        radius: spec.bbox().max_norm() + spec.h,
        h: spec.h / opts.network_refine.max(1) as f64,
        fixpoint_tol: spec.fixpoint_tol,
        max_iter: spec.max_iter,
    };
    let net = solve_value_network(prob, &net_spec)?;
    let rows: Vec<EpsRow> = if opts.parallel {
        eps.par_iter()
            .map(|&e| study_row(prob, e, spec, &net, opts))
            .collect::<Result<_>>()?
    } else {
        eps.iter()
            .map(|&e| study_row(prob, e, spec, &net, opts))
            .collect::<Result<_>>()?
    };
    let slack = opts.slack.unwrap_or(5.0 * spec.h);
    let sup_error: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    let monotone = sup_error.windows(2).all(|w| w[1] < w[0]);
    let margins_ok = rows
        .iter()
        .all(|r| r.min_network_margin >= -slack && r.min_return_margin >= -slack);
    let per_eps: Vec<f64> = rows.iter().map(|r| r.lipschitz_on_network).collect();
    let fitted = per_eps.iter().copied().fold(0.0, f64::max);
    let least = per_eps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvergenceReport {
        eps: eps.to_vec(),
        sup_error,
        chain_margins: rows,
        lipschitz_fit: LipschitzFit {
            per_eps,
            fitted,
            spread: if least > 0.0 { fitted / least } else { f64::INFINITY },
        },
        slack,
        value_bound: prob.value_bound(),
        monotone,
        margins_ok,
        network_junction_value: net.junction,
    })
}
