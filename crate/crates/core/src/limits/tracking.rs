//! On-network path that shadows a penalized trajectory once it is inside the layer.

use serde::Serialize;

use crate::dynamics::{entry_bound_gamma, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::geometry::{penalty, PlanePoint};

use super::trajectory::LimitTrajectory;

#[derive(Debug, Clone, Serialize)]
pub struct TrackingReport {
    pub gamma: f64,
    /// Layer entry time `4 d(x)^(1/4) ε^(1−γ)` where tracking starts.
    pub start_time: f64,
    /// Clamp width `ε^(γ/8)`.
    pub clamp: f64,
    /// Slowdown factor `(1 + 2 f_inf ε^(5γ/24))^(−1)`.
    pub slowdown: f64,
    pub times: Vec<f64>,
    pub path: Vec<PlanePoint>,
    pub sup_distance: f64,
    pub sup_time: f64,
    /// `sup_distance / (ε^(γ/8) + ε^(5γ/24) T)`.
    pub ratio: f64,
    /// Bound on `ratio` implied by the construction, `2 + 2 f (|x|/T + √2 f)`.
    pub ratio_bound: f64,
    pub max_speed: f64,
    pub speed_bound: f64,
    /// Largest `d(X) / ε^(4γ/3)` after `start_time`; at most 1 when the layer was entered.
    pub layer_excess: f64,
}

impl TrackingReport {
    pub fn speed_ok(&self, tol: f64) -> bool {
        self.max_speed <= self.speed_bound + tol
    }

    pub fn limit_trajectory(&self) -> LimitTrajectory {
        LimitTrajectory::from_samples(&self.times, &self.path, 0.0)
    }
}

/// Network point `Y` tracking `p`.
fn tracked_point(p: PlanePoint, clamp: f64, slowdown: f64) -> PlanePoint {
    let (a1, a2) = (p.x1.abs(), p.x2.abs());
    if a2 >= a1 && a2 > clamp {
        PlanePoint::new(0.0, slowdown * p.x2.signum() * (a2 - clamp))
    } else if a1 > clamp {
        PlanePoint::new(slowdown * p.x1.signum() * (a1 - clamp), 0.0)
    } else {
        PlanePoint::ORIGIN
    }
}

/// Builds the tracking path on `[start_time, T]` at the trajectory's nodes and measures its
/// distance to the penalized path and its finite-difference speed.
pub fn tracking_trajectory(traj: &TrajectoryRecord, gamma: f64) -> Result<TrackingReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInput(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let eps = traj.eps;
    let f = traj.f_inf();
    let horizon = traj.horizon();
    let start = entry_bound_gamma(traj.x0, eps, gamma);
    if horizon < start {
        return Err(Error::HorizonTooShort {
            horizon,
            entry: start,
        });
    }
    let clamp = eps.powf(gamma / 8.0);
    let e524 = eps.powf(5.0 * gamma / 24.0);
    let slowdown = 1.0 / (1.0 + 2.0 * f * e524);
    let layer = eps.powf(4.0 * gamma / 3.0);

    let mut times = vec![start];
    let mut xs = vec![traj.state_at(start)];
    for (&t, &p) in traj.times.iter().zip(&traj.states) {
        if t > start {
            times.push(t);
            xs.push(p);
        }
    }
    let path: Vec<PlanePoint> = xs.iter().map(|&p| tracked_point(p, clamp, slowdown)).collect();

    let (mut sup_distance, mut sup_time) = (0.0, start);
    let mut layer_excess: f64 = 0.0;
    for ((&t, &x), &y) in times.iter().zip(&xs).zip(&path) {
        let dist = x.dist(y);
        if dist > sup_distance {
            sup_distance = dist;
            sup_time = t;
        }
        layer_excess = layer_excess.max(penalty(x) / layer);
    }
    let max_speed = times
        .windows(2)
        .zip(path.windows(2))
        .filter(|(t, _)| t[1] > t[0])
        .map(|(t, y)| y[1].dist(y[0]) / (t[1] - t[0]))
        .fold(0.0, f64::max);
    let ratio = sup_distance / (clamp + e524 * horizon);
    let ratio_bound = 2.0 + 2.0 * f * (traj.x0.norm() / horizon + std::f64::consts::SQRT_2 * f);

    Ok(TrackingReport {
        gamma,
        start_time: start,
        clamp,
        slowdown,
        times,
        path,
        sup_distance,
        sup_time,
        ratio,
        ratio_bound,
        max_speed,
        speed_bound: std::f64::consts::SQRT_2 * f,
        layer_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_perturbed, ControlSchedule, IntegratorConfig};
    use std::f64::consts::PI;

    #[test]
    fn on_network_path_only_slows_down() {
        let eps = 1e-3;
        let tr = integrate_perturbed(
            PlanePoint::new(0.0, 1.0),
            &ControlSchedule::constant(PlanePoint::new(0.0, -1.0)),
            eps,
            &IntegratorConfig::with_horizon(0.5),
        )
        .unwrap();
        let r = tracking_trajectory(&tr, 0.5).unwrap();
        assert_eq!(r.start_time, 0.0);
        // |Y − X| = c s + (1 − s) X2 <= c + (1 − s)
        assert!(r.sup_distance <= r.clamp + (1.0 - r.slowdown) + 1e-12);
        assert!(r.speed_ok(1e-6));
        assert!(r.max_speed <= r.slowdown + 1e-9);
    }

    #[test]
    fn ratio_stays_bounded_off_network() {
        for eps in [1e-2, 1e-3] {
            let tr = integrate_perturbed(
                PlanePoint::new(1.0, 1.0),
                &ControlSchedule::direction(PI / 8.0),
                eps,
                &IntegratorConfig::with_horizon(1.0),
            )
            .unwrap();
            let r = tracking_trajectory(&tr, 0.5).unwrap();
            assert!(r.ratio <= r.ratio_bound, "eps {eps}: {} > {}", r.ratio, r.ratio_bound);
            assert!(r.speed_ok(1e-6), "speed {}", r.max_speed);
            assert!(r.limit_trajectory().validate(f64::INFINITY, 1e-12).is_ok());
        }
    }

    #[test]
    fn horizon_shorter_than_entry_is_an_error() {
        let tr = integrate_perturbed(
            PlanePoint::new(2.0, 2.0),
            &ControlSchedule::constant(PlanePoint::ORIGIN),
            1e-2,
            &IntegratorConfig::with_horizon(0.05),
        )
        .unwrap();
        assert!(matches!(tracking_trajectory(&tr, 0.5), Err(Error::HorizonTooShort { .. })));
        assert!(tracking_trajectory(&tr, 1.5).is_err());
    }

    #[test]
    fn tracked_point_cases() {
        assert_eq!(tracked_point(PlanePoint::new(0.01, 2.0), 0.5, 1.0), PlanePoint::new(0.0, 1.5));
        assert_eq!(tracked_point(PlanePoint::new(-3.0, 0.0), 0.5, 0.5), PlanePoint::new(-1.25, 0.0));
        assert_eq!(tracked_point(PlanePoint::new(0.2, -0.3), 0.5, 1.0), PlanePoint::ORIGIN);
    }
}
