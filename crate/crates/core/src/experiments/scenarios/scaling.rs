//! `X^{x,e_θ,ε}(t) = ρ^(−1) X^{ρx,e_θ,ρ³ε}(ρt)` at matched sample times.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::Rng;

use crate::dynamics::{integrate_perturbed, ControlSchedule};
use crate::error::Result;

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::random::point_in_box;
use super::super::{map_jobs, RunOutput};
use super::{integrator, rng};

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.scaling;
    out.anchors(&["scaling-law"]);
    let mut g = rng(cfg.seed);
    let draws: Vec<_> = (0..p.samples)
        .map(|_| {
            let x = point_in_box(&mut g, p.box_half);
            let theta = g.gen_range(0.0..TAU);
            let rho = p.rhos[g.gen_range(0..p.rhos.len())];
            (x, theta, rho)
        })
        .collect();
    let n = (p.samples_per_unit as f64 * p.horizon).ceil() as usize;
    let dt = p.horizon / n as f64;
    let results = map_jobs(cfg.parallel, draws, |(x, theta, rho)| {
        let alpha = ControlSchedule::direction(theta);
        let mut c1 = integrator(p.horizon, &p.tolerances);
        c1.sample_dt = Some(dt);
        let mut c2 = integrator(rho * p.horizon, &p.tolerances);
        c2.sample_dt = Some(rho * dt);
        let a = integrate_perturbed(x, &alpha, p.eps, &c1)?;
        let b = integrate_perturbed(x * rho, &alpha, rho.powi(3) * p.eps, &c2)?;
        // relative to max(1, |X|) so that rel_tol is the natural unit
        let disc = (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                let xa = a.state_at(t);
                xa.dist(b.state_at(rho * t) * (1.0 / rho)) / xa.norm().max(1.0)
            })
            .fold(0.0, f64::max);
        Ok((x, theta, rho, disc))
    })?;
    let bound = p.factor * p.tolerances.rel_tol;
    let mut csv = String::from("x1,x2,theta,rho,eps,discrepancy,bound\n");
    for (i, (x, theta, rho, disc)) in results.iter().enumerate() {
        let _ = writeln!(csv, "{},{},{theta},{rho},{},{disc},{bound}", x.x1, x.x2, p.eps);
        out.check(Assertion::at_most(format!("sample={i}/rho={rho}"), *disc, bound));
    }
    out.file("scaling.csv", csv);
    Ok(())
}
