//! `V^ε → V̄∘φ_d` over an ε ladder on a planar grid.

use std::fmt::Write as _;

use crate::error::Result;
use crate::value::{convergence_study, ConvergenceOptions, ValueProblem};

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::RunOutput;

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.value;
    out.anchors(&[
        "value-convergence",
        "comparison-inequalities",
        "value-bound",
        "lipschitz-on-network",
    ]);
    let prob = ValueProblem::new(p.lambda, p.cost)?;
    let opts = ConvergenceOptions {
        parallel: cfg.parallel,
        ..p.study
    };
    let r = convergence_study(&prob, &p.eps, &p.grid, &opts)?;
    out.check(Assertion::holds("sup-error-decreasing", r.monotone));
    let mut csv = String::from(
        "eps,sup_error,sup_x1,sup_x2,modulus,min_network_margin,min_return_margin,tau_ratio,lipschitz,max_abs,iterations\n",
    );
    for row in &r.chain_margins {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.eps,
            row.sup_error,
            row.sup_error_at.x1,
            row.sup_error_at.x2,
            row.modulus,
            row.min_network_margin,
            row.min_return_margin,
            row.tau_ratio,
            row.lipschitz_on_network,
            row.max_abs,
            row.iterations
        );
        let id = format!("eps={}", row.eps);
        out.check(Assertion::at_least(format!("{id}/network-margin"), row.min_network_margin, -r.slack));
        out.check(Assertion::at_least(format!("{id}/return-margin"), row.min_return_margin, -r.slack));
        out.check(Assertion::at_most(format!("{id}/value-bound"), row.max_abs, r.value_bound));
    }
    out.check(Assertion::at_most("lipschitz-spread", r.lipschitz_fit.spread, p.lipschitz_spread));
    out.file("convergence_table.csv", csv);
    let mut text = serde_json::to_string_pretty(&r.to_json())?;
    text.push('\n');
    out.file("convergence.json", text);
    Ok(())
}
