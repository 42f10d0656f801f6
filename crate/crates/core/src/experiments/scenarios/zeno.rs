//! Dyadic Zeno control: junction returns, branch visits, and the penalized path on the
//! network for several ε.

use std::fmt::Write as _;

use crate::dynamics::integrate_perturbed;
use crate::error::Result;
use crate::geometry::{Branch, PlanePoint};
use crate::limits::{zeno_branch, zeno_control};

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::{map_jobs, RunOutput};
use super::integrator;

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.zeno;
    out.anchors(&["zeno-control", "junction-returns", "branch-visits", "penalty-inactive-on-network"]);
    let (control, limit) = zeno_control(&p.cycle, p.depth)?;
    let first = 0.5f64.powi(p.depth as i32);
    out.check(Assertion::holds(
        "quiet-start",
        limit.state_at(0.5 * first) == PlanePoint::ORIGIN && limit.state_at(first) == PlanePoint::ORIGIN,
    ));
    for k in 0..p.depth {
        let t = 0.5f64.powi(k as i32);
        out.check(Assertion::at_most(format!("return/k={k}"), limit.state_at(t).norm(), 0.0));
    }
    let mut expected = vec![Branch::O];
    for k in (0..p.depth).rev() {
        let b = zeno_branch(&p.cycle, k);
        let t = 0.75 * 0.5f64.powi(k as i32);
        out.check(Assertion::holds(format!("visit/k={k}/{b}"), limit.branch_at(t) == b));
        if expected.last() != Some(&b) {
            expected.push(b);
        }
    }
    // returns between excursions are instants, not segments
    expected.push(Branch::O);
    out.check(Assertion::holds("itinerary", limit.itinerary() == expected));
    out.check(Assertion::holds("speed-bound", limit.validate(1.0, 0.0).is_ok()));

    let mut csv = String::from("t,a1,a2\n");
    for (t, a) in control.breakpoints().iter().zip(control.values()) {
        let _ = writeln!(csv, "{t},{},{}", a.x1, a.x2);
    }
    out.file("zeno_control.csv", csv);
    let mut text = serde_json::to_string_pretty(&limit.to_json())?;
    text.push('\n');
    out.file("zeno_limit.json", text);

    let icfg = integrator(1.25, &p.tolerances);
    let tol = p.tolerances.abs_tol;
    let runs = map_jobs(cfg.parallel, p.eps.clone(), |eps| integrate_perturbed(PlanePoint::ORIGIN, &control, eps, &icfg))?;
    for (eps, tr) in p.eps.iter().zip(&runs) {
        let dev = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(&t, &x)| x.dist(limit.state_at(t)))
            .fold(0.0, f64::max);
        let k = tr.k_states.iter().chain(&tr.k_direct).map(|k| k.norm()).fold(0.0, f64::max);
        out.check(Assertion::at_most(format!("eps={eps}/limit-deviation"), dev, tol));
        out.check(Assertion::at_most(format!("eps={eps}/reflection"), k, tol));
        let mut buf = Vec::new();
        tr.write_csv(&mut buf)?;
        out.file(&format!("zeno_eps={eps}.csv"), buf);
    }
    if let [a, rest @ ..] = &runs[..] {
        for (eps, b) in p.eps[1..].iter().zip(rest) {
            let gap = a.times.iter().map(|&t| a.state_at(t).dist(b.state_at(t))).fold(0.0, f64::max);
            out.check(Assertion::at_most(format!("eps-independence/{}-vs-{eps}", p.eps[0]), gap, 2.0 * tol));
        }
    }
    Ok(())
}
