mod apriori;
mod counterexample;
mod junction;
mod scaling;
mod tracking;
mod value;
mod zeno;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::IntegratorConfig;
use crate::error::Result;
use crate::geometry::PlanePoint;
use crate::limits::gradient_flow;

use super::config::{ExperimentConfig, Scenario, Tolerances};
use super::manifest::Assertion;
use super::random::point_in_box;
use super::RunOutput;

pub(super) fn dispatch(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    match cfg.scenario {
        Scenario::JunctionBehavior => junction::run(cfg, out),
        Scenario::Zeno => zeno::run(cfg, out),
        Scenario::ScalingLaw => scaling::run(cfg, out),
        Scenario::Tracking => tracking::run(cfg, out),
        Scenario::Counterexample => counterexample::run(cfg, out),
        Scenario::ValueConvergence => value::run(cfg, out),
        Scenario::AprioriSuite => apriori::run(cfg, out),
    }
}

fn integrator(horizon: f64, tol: &Tolerances) -> IntegratorConfig {
    IntegratorConfig::with_horizon(horizon).tolerances(tol.rel_tol, tol.abs_tol)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gradient-flow limits against the hyperbola closed form, and the drift of `z2² − z1²`,
/// at `n` random points of `[−half, half]²`.
pub fn projection_checks(n: usize, seed: u64, half: f64, tol: f64) -> Result<Vec<Assertion>> {
    let mut g = rng(seed);
    let pts: Vec<PlanePoint> = (0..n).map(|_| point_in_box(&mut g, half)).collect();
    let mut worst_err: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    let mut all_monotone = true;
    for x in pts {
        let r = gradient_flow(x, 1e-24)?;
        let exact = crate::geometry::project_to_network(x).to_plane();
        worst_err = worst_err.max(r.limit.to_plane().dist(exact));
        worst_drift = worst_drift.max(r.hyperbola_drift);
        all_monotone &= r.monotone;
    }
    Ok(vec![
        Assertion::at_most("projection/limit-error", worst_err, tol),
        Assertion::at_most("projection/hyperbola-drift", worst_drift, 1e-8),
        Assertion::holds("projection/penalty-monotone", all_monotone),
    ])
}
