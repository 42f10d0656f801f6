//! Leaving the network beats every network-confined control for the cost
//! `2 + a1 + a2 + |x2|`.

use std::fmt::Write as _;

use crate::error::Result;
use crate::value::counterexample_costs;

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::{map_jobs, RunOutput};

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.counterexample;
    out.anchors(&["control-dependent-cost-counterexample", "network-value-gap"]);
    let c = counterexample_costs(p.lambda)?;
    out.check(Assertion::greater(format!("lambda={}/strict-gap", p.lambda), c.lower - c.upper, 0.0));
    out.check(Assertion::at_most(
        format!("lambda={}/quadrature", p.lambda),
        (c.upper_quadrature - c.upper).abs(),
        p.quadrature_tol,
    ));
    let mut text = serde_json::to_string_pretty(&c)?;
    text.push('\n');
    out.file("counterexample.json", text);

    // log-spaced sweep
    let (a, b) = (p.sweep_min.ln(), p.sweep_max.ln());
    let m = p.sweep_points - 1;
    let lambdas: Vec<f64> = (0..=m).map(|i| (a + (b - a) * i as f64 / m as f64).exp()).collect();
    let rows = map_jobs(cfg.parallel, lambdas, counterexample_costs)?;
    let mut csv = String::from("lambda,upper,lower,gap,upper_quadrature\n");
    let mut min_gap = f64::INFINITY;
    for r in &rows {
        let gap = r.lower - r.upper;
        min_gap = min_gap.min(gap);
        let _ = writeln!(csv, "{},{},{},{gap},{}", r.lambda, r.upper, r.lower, r.upper_quadrature);
    }
    out.check(Assertion::greater("sweep/min-gap", min_gap, 0.0));
    out.file("counterexample_sweep.csv", csv);
    Ok(())
}
