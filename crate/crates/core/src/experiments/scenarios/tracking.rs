//! On-network tracking paths for random `(x, α)` across an ε ladder.

use std::fmt::Write as _;

use crate::dynamics::integrate_perturbed;
use crate::error::Result;
use crate::limits::tracking_trajectory;

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::random::samples;
use super::super::{map_jobs, RunOutput};
use super::{integrator, rng};

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.tracking;
    out.anchors(&["tracking-distance", "tracking-speed", "layer-entry-time"]);
    let draws = samples(&mut rng(cfg.seed), &p.random, p.horizon)?;
    let icfg = integrator(p.horizon, &p.tolerances);
    let jobs: Vec<_> = draws
        .iter()
        .enumerate()
        .flat_map(|(i, d)| p.eps.iter().map(move |&e| (i, d, e)))
        .collect();
    let reports = map_jobs(cfg.parallel, jobs, |(i, (x, alpha), eps)| {
        let tr = integrate_perturbed(*x, alpha, eps, &icfg)?;
        Ok((i, eps, tracking_trajectory(&tr, p.gamma)?))
    })?;
    let mut csv = String::from(
        "sample,eps,start_time,sup_distance,sup_time,ratio,ratio_bound,max_speed,speed_bound,layer_excess\n",
    );
    for (i, eps, r) in &reports {
        let _ = writeln!(
            csv,
            "{i},{eps},{},{},{},{},{},{},{},{}",
            r.start_time, r.sup_distance, r.sup_time, r.ratio, r.ratio_bound, r.max_speed, r.speed_bound, r.layer_excess
        );
        let id = format!("sample={i}/eps={eps}");
        out.check(Assertion::at_most(format!("{id}/ratio"), r.ratio, r.ratio_bound));
        out.check(Assertion::at_most(format!("{id}/speed"), r.max_speed, r.speed_bound + p.speed_tol));
    }
    out.file("tracking.csv", csv);
    Ok(())
}
