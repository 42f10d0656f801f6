//! Constant controls from `O` and from `e_N`: closed-form limits against penalized paths,
//! the first-crossing abscissa, and the semigroup and stability witnesses.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};
use std::fmt::Write as _;

use crate::dynamics::{integrate_perturbed, ControlSchedule};
use crate::error::Result;
use crate::geometry::{nearest_branch, Branch, NetworkPoint, PlanePoint};
use crate::limits::{constant_control_limit, equilibrium_point, eta_lower_bound, first_crossing, penalized_field};

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::{map_jobs, RunOutput};
use super::integrator;

struct Case {
    start: Branch,
    theta: f64,
    expected: Branch,
    observed: Branch,
    state_error: f64,
    bound: f64,
}

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.junction;
    out.anchors(&[
        "penalized-dynamics",
        "limit-from-junction",
        "limit-from-branch",
        "first-crossing-abscissa",
        "equilibrium-point",
        "semigroup-failure",
        "instability",
    ]);
    let icfg = integrator(p.horizon, &p.tolerances);
    let bound = p.error_factor * p.eps.cbrt();
    let starts = [NetworkPoint::JUNCTION, NetworkPoint::new(Branch::N, 1.0)?];
    let jobs: Vec<(NetworkPoint, f64)> = starts
        .iter()
        .flat_map(|&s| (0..p.angles).map(move |j| (s, TAU * j as f64 / p.angles as f64)))
        .collect();
    let cases = map_jobs(cfg.parallel, jobs, |(start, theta)| {
        let limit = constant_control_limit(start, theta)?;
        let tr = integrate_perturbed(start.to_plane(), &ControlSchedule::direction(theta), p.eps, &icfg)?;
        let state_error = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(&t, &x)| x.dist(limit.state_at(t)))
            .fold(0.0, f64::max);
        let end = *tr.states.last().expect("nonempty path");
        Ok(Case {
            start: start.branch(),
            theta,
            expected: limit.branch_at(p.horizon),
            observed: nearest_branch(end, bound),
            state_error,
            bound,
        })
    })?;
    let mut csv = String::from("start,theta,eps,expected,observed,state_error,bound\n");
    for c in &cases {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            c.start, c.theta, p.eps, c.expected, c.observed, c.state_error, c.bound
        );
        let id = format!("from-{}/theta={:.6}", c.start, c.theta);
        out.check(Assertion::holds(format!("{id}/branch-{}", c.expected), c.expected == c.observed));
        out.check(Assertion::at_most(format!("{id}/state-error"), c.state_error, c.bound));
    }
    out.file("junction_cases.csv", csv);

    // first crossing of x2 = 0 for θ strictly inside (π, 3π/2)
    let angles: Vec<f64> = (1..=p.eta_angles)
        .map(|j| PI + FRAC_PI_2 * j as f64 / (p.eta_angles + 1) as f64)
        .collect();
    let mut csv = String::from("theta,eps,t,eta,ratio,lower_ratio\n");
    for &theta in &angles {
        let jobs: Vec<f64> = p.eta_eps.clone();
        let rows = map_jobs(cfg.parallel, jobs, |eps| {
            let (t, eta) = first_crossing(theta, eps, &icfg)?;
            Ok((eps, t, eta))
        })?;
        let lower = eta_lower_bound(theta, 1.0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(eps, t, eta) in &rows {
            let ratio = eta / eps.cbrt();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            let _ = writeln!(csv, "{theta},{eps},{t},{eta},{ratio},{lower}");
        }
        let id = format!("eta/theta={theta:.6}");
        out.check(Assertion::at_least(format!("{id}/min-ratio"), lo, lower - 1e-6));
        out.check(Assertion::less(format!("{id}/max-ratio"), hi, 0.0));
        for &eps in &p.eta_eps {
            let x = equilibrium_point(theta, eps).expect("third-quadrant angle");
            out.check(Assertion::at_most(
                format!("equilibrium/theta={theta:.6}/eps={eps}"),
                penalized_field(x, theta, eps).norm(),
                1e-9,
            ));
        }
    }
    out.file("first_crossing.csv", csv);

    witnesses(cfg, out)
}

/// `α ≡ e_{5π/4}`: from `e_N` the limit goes through `O` into `W`, from `O` it stays put,
/// and starts `e_N / n` still reach `W`.
fn witnesses(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.junction;
    let theta = 5.0 * PI / 4.0;
    let from_n = constant_control_limit(NetworkPoint::new(Branch::N, 1.0)?, theta)?;
    let from_o = constant_control_limit(NetworkPoint::JUNCTION, theta)?;
    for &s in &p.witness_times {
        let at = from_n.state_at(SQRT_2 + s);
        let expected = PlanePoint::new(-s / SQRT_2, 0.0);
        out.check(Assertion::at_most(format!("semigroup/s={s}/path"), at.dist(expected), 1e-12));
        out.check(Assertion::holds(
            format!("semigroup/s={s}/restart-at-junction"),
            from_o.state_at(s) == PlanePoint::ORIGIN,
        ));
    }
    let mut json = serde_json::Map::new();
    json.insert("from_north".into(), from_n.to_json());
    json.insert("from_junction".into(), from_o.to_json());

    let icfg_base = p.tolerances;
    let mut csv = String::from("n,hit_time,limit_branch,penalized_branch\n");
    for n in 1..=p.instability_starts {
        let r = 1.0 / n as f64;
        let start = NetworkPoint::new(Branch::N, r)?;
        let hit = r * SQRT_2;
        let horizon = hit + 1.0;
        let limit = constant_control_limit(start, theta)?;
        let tr = integrate_perturbed(
            start.to_plane(),
            &ControlSchedule::direction(theta),
            p.eps,
            &integrator(horizon, &icfg_base),
        )?;
        let end = *tr.states.last().expect("nonempty path");
        let seen = nearest_branch(end, p.error_factor * p.eps.cbrt());
        let lb = limit.branch_at(horizon);
        let _ = writeln!(csv, "{n},{hit},{lb},{seen}");
        out.check(Assertion::holds(format!("instability/n={n}/limit-enters-W"), lb == Branch::W));
        out.check(Assertion::holds(format!("instability/n={n}/penalized-enters-W"), seen == Branch::W));
    }
    out.check(Assertion::holds(
        "instability/junction-start-stays",
        from_o.segments.len() == 1 && from_o.branch_at(1e6) == Branch::O,
    ));
    out.file("instability.csv", csv);
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(json))?;
    text.push('\n');
    out.file("witness_limits.json", text);
    Ok(())
}
