//! Estimates along penalized paths for random `(x, α)`: growth, penalty rate and integral,
//! invariance of `Z(κ ε^(4/3))`, and the two entry-time bounds.

use std::fmt::Write as _;

use crate::dynamics::{
    check_apriori_estimates, entry_bound_gamma, entry_bound_gamma_applies, entry_time, integrate_perturbed,
    invariance_excursion, reach_constant,
};
use crate::error::Result;
use crate::geometry::{invariance_threshold, penalty};

use super::super::config::ExperimentConfig;
use super::super::manifest::Assertion;
use super::super::random::samples;
use super::super::{map_jobs, RunOutput};
use super::{integrator, rng};

pub(super) fn run(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let p = &cfg.apriori;
    out.anchors(&[
        "growth-bound",
        "penalty-rate",
        "penalty-integral",
        "invariant-sublevel-sets",
        "entry-time-power-bound",
        "entry-time-level-bound",
    ]);
    let draws = samples(&mut rng(cfg.seed), &p.random, p.horizon)?;
    let icfg = integrator(p.horizon, &p.tolerances);
    let f_inf = p.random.f_inf;

    let jobs: Vec<_> = draws
        .iter()
        .enumerate()
        .flat_map(|(i, d)| p.eps.iter().map(move |&e| (i, d, e)))
        .collect();
    let rows = map_jobs(cfg.parallel, jobs, |(i, (x, alpha), eps)| {
        let tr = integrate_perturbed(*x, alpha, eps, &icfg)?;
        let rep = check_apriori_estimates(&tr);
        let lam = invariance_threshold(f_inf, eps);
        Ok((i, eps, rep, invariance_excursion(&tr, lam)))
    })?;
    let mut csv = String::from("sample,eps,passed,rate_excess,integral_excess,growth_excess,entry,worst_excursion\n");
    for (i, eps, rep, exc) in &rows {
        let (entry, worst) = exc.unwrap_or((f64::NAN, f64::NAN));
        let _ = writeln!(
            csv,
            "{i},{eps},{},{},{},{},{entry},{worst}",
            rep.passed(),
            rep.rate_excess,
            rep.integral_excess,
            rep.growth_excess
        );
        let id = format!("sample={i}/eps={eps}");
        out.check(Assertion::holds(format!("{id}/estimates"), rep.passed()));
        if let Some((_, worst)) = exc {
            out.check(Assertion::at_most(format!("{id}/invariance"), *worst, 1.0 + p.invariance_slack));
        }
    }
    out.file("apriori.csv", csv);

    let jobs: Vec<_> = draws
        .iter()
        .enumerate()
        .flat_map(|(i, d)| p.entry_eps.iter().map(move |&e| (i, d, e)))
        .collect();
    let entries = map_jobs(cfg.parallel, jobs, |(i, (x, alpha), eps)| {
        let tr = integrate_perturbed(*x, alpha, eps, &icfg)?;
        let t_gamma = entry_time(&tr, eps.powf(4.0 * p.gamma / 3.0));
        let t_level = entry_time(&tr, p.entry_level);
        Ok((i, *x, eps, t_gamma, t_level))
    })?;
    let mut csv = String::from("sample,eps,entry_gamma,bound_gamma,entry_level,bound_level\n");
    let mut fitted = vec![0.0f64; p.entry_eps.len()];
    for (i, x, eps, t_gamma, t_level) in &entries {
        let id = format!("sample={i}/eps={eps}");
        let b_gamma = entry_bound_gamma(*x, *eps, p.gamma);
        if entry_bound_gamma_applies(*eps, p.gamma, f_inf) && b_gamma <= p.horizon {
            out.check(Assertion::at_most(
                format!("{id}/entry-gamma"),
                t_gamma.unwrap_or(f64::INFINITY),
                b_gamma,
            ));
        }
        let b_level = reach_constant(*x, f_inf, p.horizon) * eps / p.entry_level;
        if penalty(*x) > p.entry_level {
            let t = t_level.unwrap_or(f64::INFINITY);
            if b_level <= p.horizon {
                out.check(Assertion::at_most(format!("{id}/entry-level"), t, b_level));
            }
            let k = p.entry_eps.iter().position(|e| e == eps).expect("ladder member");
            fitted[k] = fitted[k].max(t * p.entry_level / eps);
        }
        let _ = writeln!(
            csv,
            "{i},{eps},{},{b_gamma},{},{b_level}",
            t_gamma.unwrap_or(f64::NAN),
            t_level.unwrap_or(f64::NAN)
        );
    }
    let hi = fitted.iter().copied().fold(0.0, f64::max);
    let lo = fitted.iter().copied().fold(f64::INFINITY, f64::min);
    out.check(Assertion::at_most("entry-level/fitted-spread", hi / lo, p.entry_spread));
    let mut fit = String::from("eps,fitted_constant\n");
    for (e, c) in p.entry_eps.iter().zip(&fitted) {
        let _ = writeln!(fit, "{e},{c}");
    }
    out.file("entry_times.csv", csv);
    out.file("entry_constants.csv", fit);
    Ok(())
}
