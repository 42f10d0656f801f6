//! Runtime checks of the a priori estimates along an integrated path.

use serde::{Deserialize, Serialize};

use super::{integral_estimate_constant, TrajectoryRecord};
use crate::geometry::penalty;

#[derive(Debug, Clone, Copy, Default)]
pub struct AprioriOptions {
    /// Absolute slack; derived from the integrator tolerances when `None`.
    pub slack: Option<f64>,
    /// Left end of the energy window; defaults to the entry time into `Z(ε^(2/3))`.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub estimate: String,
    pub t1: f64,
    pub t2: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AprioriReport {
    /// `max_{t1<=t2} d(t2) − d(t1) − (t2−t1) f²ε/2`.
    pub rate_excess: f64,
    pub rate_pair: (f64, f64),
    /// `max_{t1<=t2} (1/ε)∫d − C(t2−t1) − ¼(√d(t1) − √d(t2))`.
    pub integral_excess: f64,
    pub integral_pair: (f64, f64),
    pub integral_constant: f64,
    /// `(1/ε)∫_0^T d`.
    pub scaled_penalty_integral: f64,
    pub eta: f64,
    /// `∫_η^T |Ẋ|²`.
    pub energy: f64,
    pub growth_excess: f64,
    pub slack: f64,
    pub violations: Vec<Violation>,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Largest `g(j) − g(i)` over `i <= j`, with the maximizing pair.
fn max_forward_increase(g: &[f64]) -> (f64, usize, usize) {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut min_idx = 0;
    for j in 0..g.len() {
        if g[j] < g[min_idx] {
            min_idx = j;
        }
        let v = g[j] - g[min_idx];
        if v > best.0 {
            best = (v, min_idx, j);
        }
    }
    best
}

pub fn check_apriori_estimates(traj: &TrajectoryRecord) -> AprioriReport {
    check_apriori_estimates_with(traj, &AprioriOptions::default())
}

pub fn check_apriori_estimates_with(traj: &TrajectoryRecord, opts: &AprioriOptions) -> AprioriReport {
    let eps = traj.eps;
    let f = traj.f_inf();
    let n = traj.len();
    let d: Vec<f64> = traj.penalties();
    let dmax = d.iter().copied().fold(0.0, f64::max);

    // (a) growth rate of d
    let rate = 0.5 * f * f * eps;
    let g: Vec<f64> = traj.times.iter().zip(&d).map(|(&t, &di)| di - rate * t).collect();
    let (rate_excess, i1, i2) = max_forward_increase(&g);

    // (b) integral estimate, Simpson on each step with the Hermite midpoint
    let c = integral_estimate_constant(traj.x0, f, traj.horizon());
    let mut integral = vec![0.0; n];
    let mut energy_cum = vec![0.0; n];
    for i in 1..n {
        let (t0, t1) = (traj.times[i - 1], traj.times[i]);
        let h = t1 - t0;
        let dm = penalty(traj.state_at(0.5 * (t0 + t1)));
        integral[i] = integral[i - 1] + h * (d[i - 1] + 4.0 * dm + d[i]) / (6.0 * eps);
        let (f0, f1) = traj.slopes[i - 1];
        let vm = (traj.states[i] - traj.states[i - 1]) * (1.5 / h) - (f0 + f1) * 0.25;
        energy_cum[i] = energy_cum[i - 1] + h * (f0.dot(f0) + 4.0 * vm.dot(vm) + f1.dot(f1)) / 6.0;
    }
    let hfun: Vec<f64> = (0..n)
        .map(|i| integral[i] - c * traj.times[i] + 0.25 * d[i].sqrt())
        .collect();
    let (integral_excess, j1, j2) = max_forward_increase(&hfun);

    // (c) energy on [η, T]
    let eta = opts.eta.unwrap_or_else(|| {
        super::entry_time(traj, eps.powf(2.0 / 3.0)).unwrap_or(traj.horizon())
    });
    let k = traj.times.partition_point(|&t| t < eta).min(n - 1);
    let energy = energy_cum[n - 1] - energy_cum[k];

    let tol = traj.config.rel_tol + traj.config.abs_tol;
    let slack = opts.slack.unwrap_or(100.0 * tol * (1.0 + dmax + integral[n - 1] + c * traj.horizon()));

    let mut violations = Vec::new();
    if rate_excess > slack {
        violations.push(Violation {
            estimate: "penalty-growth-rate".into(),
            t1: traj.times[i1],
            t2: traj.times[i2],
            excess: rate_excess,
        });
    }
    if integral_excess > slack {
        violations.push(Violation {
            estimate: "scaled-penalty-integral".into(),
            t1: traj.times[j1],
            t2: traj.times[j2],
            excess: integral_excess,
        });
    }
    if !energy.is_finite() {
        violations.push(Violation {
            estimate: "energy".into(),
            t1: eta,
            t2: traj.horizon(),
            excess: f64::INFINITY,
        });
    }
    let growth_excess = traj.growth_bound_excess();
    if growth_excess > slack {
        violations.push(Violation {
            estimate: "growth-bound".into(),
            t1: 0.0,
            t2: traj.horizon(),
            excess: growth_excess,
        });
    }

    AprioriReport {
        rate_excess,
        rate_pair: (traj.times[i1], traj.times[i2]),
        integral_excess,
        integral_pair: (traj.times[j1], traj.times[j2]),
        integral_constant: c,
        scaled_penalty_integral: integral[n - 1],
        eta,
        energy,
        growth_excess,
        slack,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_perturbed, ControlSchedule, IntegratorConfig};
    use crate::geometry::PlanePoint;

    #[test]
    fn forward_increase() {
        assert_eq!(max_forward_increase(&[3.0, 1.0, 4.0, 0.0, 2.0]), (3.0, 1, 2));
        assert_eq!(max_forward_increase(&[3.0, 2.0, 1.0]).0, 0.0);
    }

    #[test]
    fn driftless_rate_is_nonpositive() {
        let tr = integrate_perturbed(
            PlanePoint::new(1.0, 1.0),
            &ControlSchedule::constant(PlanePoint::ORIGIN),
            1e-3,
            &IntegratorConfig::with_horizon(0.5),
        )
        .unwrap();
        let r = check_apriori_estimates(&tr);
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.rate_excess <= 1e-12);
    }

    #[test]
    fn on_network_penalty_integral_vanishes() {
        let tr = integrate_perturbed(
            PlanePoint::new(0.0, 1.0),
            &ControlSchedule::constant(PlanePoint::new(0.0, -1.0)),
            1e-2,
            &IntegratorConfig::with_horizon(0.5),
        )
        .unwrap();
        let r = check_apriori_estimates(&tr);
        assert_eq!(r.scaled_penalty_integral, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn diagonal_drive_passes_all_checks() {
        let tr = integrate_perturbed(
            PlanePoint::new(1.0, 1.0),
            &ControlSchedule::direction(std::f64::consts::FRAC_PI_4),
            1e-2,
            &IntegratorConfig::with_horizon(1.0),
        )
        .unwrap();
        let r = check_apriori_estimates(&tr);
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.energy.is_finite() && r.energy > 0.0);
        assert!(r.integral_excess <= r.slack);
    }
}
