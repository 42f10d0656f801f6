//! Control surgery on the network: the tangential control that reproduces a limit path,
//! geodesic steering between network points, and concatenation of controls.

use crate::dynamics::{entry_time, ControlSchedule, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::geometry::{invariance_threshold, penalty, project_to_network, Branch, NetworkPoint, PlanePoint};

use super::junction::drive_on_network;
use super::trajectory::LimitTrajectory;

#[derive(Debug, Clone, Copy)]
pub struct RestrictedOptions {
    /// Finite-difference step for `k̇`.
    pub dt: f64,
    /// Largest tolerated `|ᾱ| − 1` before clipping.
    pub excess_tol: f64,
}

impl Default for RestrictedOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            excess_tol: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestrictedControl {
    /// `ᾱ = α − k̇`, clipped to the unit ball.
    pub control: ControlSchedule,
    /// `x̄ = φ_d(x)`, where the limit path starts.
    pub start: NetworkPoint,
    /// `ᾱ` is zero before this time, when the penalized path reaches `Z(2κε^(4/3))`.
    pub settle_time: f64,
    /// Largest `|ᾱ| − 1` before clipping.
    pub max_excess: f64,
}

impl RestrictedControl {
    /// Network path from `x̄` driven by `ᾱ`.
    pub fn replay(&self, horizon: f64) -> LimitTrajectory {
        drive_on_network(self.start, &self.control, horizon)
    }
}

/// Computes `ᾱ = α − k̇` from a penalized eikonal trajectory, with `k̇` by finite
/// differences on a uniform grid starting at the settle time.
pub fn restricted_control(traj: &TrajectoryRecord, opts: &RestrictedOptions) -> Result<RestrictedControl> {
    let alpha = &traj.control;
    if alpha.f_inf() > 1.0 + 1e-12 {
        return Err(Error::InvalidInput("restricted control needs |α| <= 1".into()));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let horizon = traj.horizon();
    let lam = 2.0 * invariance_threshold(1.0, traj.eps);
    let settle = if penalty(traj.x0) == 0.0 {
        0.0
    } else {
        entry_time(traj, lam).unwrap_or(horizon)
    };

    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    if settle > 0.0 {
        breakpoints.push(0.0);
        values.push(PlanePoint::ORIGIN);
    }
    let mut max_excess = f64::NEG_INFINITY;
    let n = ((horizon - settle) / opts.dt).ceil() as usize;
    for j in 0..n {
        let t0 = settle + j as f64 * opts.dt;
        let t1 = (t0 + opts.dt).min(horizon);
        if t1 <= t0 {
            break;
        }
        let da = alpha.integral(t1) - alpha.integral(t0);
        let dk = traj.k_at(t1) - traj.k_at(t0);
        let v = (da - dk) * (1.0 / (t1 - t0));
        let excess = v.norm() - 1.0;
        max_excess = max_excess.max(excess);
        if excess > opts.excess_tol {
            return Err(Error::ControlExcess { t: t0, excess });
        }
        breakpoints.push(t0);
        values.push(v.clip(1.0));
    }
    if breakpoints.last().is_none_or(|&b| b < horizon) {
        breakpoints.push(horizon);
        values.push(PlanePoint::ORIGIN);
    }
    Ok(RestrictedControl {
        control: ControlSchedule::new(breakpoints, values, 1.0)?,
        start: project_to_network(traj.x0),
        settle_time: settle,
        max_excess,
    })
}

/// Unit-speed geodesic control from `xbar` to `ybar` and its arrival time. After arrival
/// the control is zero.
pub fn steer_on_network(xbar: NetworkPoint, ybar: NetworkPoint) -> (ControlSchedule, f64) {
    let (bx, rx) = (xbar.branch(), xbar.radius());
    let (by, ry) = (ybar.branch(), ybar.radius());
    let mut pieces = Vec::new();
    if bx == by || bx == Branch::O || by == Branch::O {
        let b = if bx == Branch::O { by } else { bx };
        let dr = ry * f64::from(by == b) - rx * f64::from(bx == b);
        if b != Branch::O && dr != 0.0 {
            pieces.push((dr.abs(), b.unit() * dr.signum()));
        }
    } else {
        pieces.push((rx, -bx.unit()));
        pieces.push((ry, by.unit()));
    }
    let tau = pieces.iter().map(|p| p.0).sum();
    let c = ControlSchedule::from_pieces(&pieces, PlanePoint::ORIGIN, 1.0).expect("unit pieces");
    (c, tau)
}

/// `prefix` on `[0, tau)` followed by `α(· − tau)`.
pub fn concat(prefix: &ControlSchedule, tau: f64, alpha: &ControlSchedule) -> Result<ControlSchedule> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput("concatenation time must be nonnegative".into()));
    }
    let mut b = Vec::new();
    let mut v = Vec::new();
    for (&t, &a) in prefix.breakpoints().iter().zip(prefix.values()) {
        if t < tau {
            b.push(t);
            v.push(a);
        }
    }
    for (&t, &a) in alpha.breakpoints().iter().zip(alpha.values()) {
        b.push(tau + t);
        v.push(a);
    }
    ControlSchedule::new(b, v, prefix.f_inf().max(alpha.f_inf()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_perturbed, IntegratorConfig};
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn np(b: Branch, r: f64) -> NetworkPoint {
        NetworkPoint::new(b, r).unwrap()
    }

    #[test]
    fn on_network_trajectory_keeps_alpha() {
        let a = ControlSchedule::constant(PlanePoint::new(0.0, -1.0));
        let tr = integrate_perturbed(PlanePoint::new(0.0, 2.0), &a, 1e-3, &IntegratorConfig::with_horizon(1.0)).unwrap();
        let rc = restricted_control(&tr, &RestrictedOptions::default()).unwrap();
        assert_eq!(rc.settle_time, 0.0);
        for &v in &rc.control.values()[..rc.control.values().len() - 1] {
            assert!((v - PlanePoint::new(0.0, -1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn normal_drift_is_removed() {
        let a = ControlSchedule::constant(PlanePoint::new(0.3, -0.5));
        let eps = 1e-4;
        let tr = integrate_perturbed(PlanePoint::new(0.0, 1.0), &a, eps, &IntegratorConfig::with_horizon(1.5)).unwrap();
        let rc = restricted_control(&tr, &RestrictedOptions::default()).unwrap();
        let v = rc.control.eval(0.7);
        assert!(v.x1.abs() < 1e-3 && (v.x2 + 0.5).abs() < 1e-3, "{v}");
        let replay = rc.replay(1.5);
        for t in [0.2, 0.8, 1.4] {
            assert!(replay.state_at(t).dist(PlanePoint::new(0.0, 1.0 - 0.5 * t)) < 1e-3);
        }
    }

    #[test]
    fn bisector_from_origin_gives_zero() {
        let tr = integrate_perturbed(
            PlanePoint::ORIGIN,
            &ControlSchedule::direction(FRAC_PI_4),
            1e-3,
            &IntegratorConfig::with_horizon(1.0),
        )
        .unwrap();
        let rc = restricted_control(&tr, &RestrictedOptions::default()).unwrap();
        let v = rc.control.eval(0.5);
        assert!(v.norm() < 1e-4, "{v} settle {}", rc.settle_time);
        assert_eq!(rc.replay(1.0).state_at(1.0), PlanePoint::ORIGIN);
    }

    #[test]
    fn steering_cases() {
        let (c, tau) = steer_on_network(np(Branch::N, 1.0), np(Branch::N, 1.0));
        assert_eq!(tau, 0.0);
        assert_eq!(c.values().len(), 1);
        let (c, tau) = steer_on_network(np(Branch::N, 1.0), np(Branch::N, 3.0));
        assert_eq!(tau, 2.0);
        assert_eq!(c.eval(1.0), PlanePoint::new(0.0, 1.0));
        let (c, tau) = steer_on_network(np(Branch::N, 1.0), np(Branch::E, 2.0));
        assert_eq!(tau, 3.0);
        assert_eq!(c.eval(0.5), PlanePoint::new(0.0, -1.0));
        assert_eq!(c.eval(2.0), PlanePoint::new(1.0, 0.0));
        assert!(tau <= SQRT_2 * 5f64.sqrt());
        let (_, tau) = steer_on_network(NetworkPoint::JUNCTION, np(Branch::S, 0.5));
        assert_eq!(tau, 0.5);
        let (c, tau) = steer_on_network(np(Branch::W, 0.5), NetworkPoint::JUNCTION);
        assert_eq!(tau, 0.5);
        assert_eq!(c.eval(0.1), PlanePoint::new(1.0, 0.0));
    }

    #[test]
    fn steering_reaches_target() {
        let pts = [
            NetworkPoint::JUNCTION,
            np(Branch::E, 1.5),
            np(Branch::N, 0.25),
            np(Branch::W, 2.0),
            np(Branch::S, 1.0),
            np(Branch::N, 3.0),
        ];
        for &x in &pts {
            for &y in &pts {
                let (c, tau) = steer_on_network(x, y);
                let end = drive_on_network(x, &c, tau + 1.0).state_at(tau + 1.0);
                assert!(end.dist(y.to_plane()) < 1e-12, "{x} -> {y}");
                assert!(tau <= SQRT_2 * x.to_plane().dist(y.to_plane()) + 1e-12);
            }
        }
    }

    #[test]
    fn concatenation_shifts_time() {
        let (p, tau) = steer_on_network(np(Branch::N, 1.0), np(Branch::E, 2.0));
        let a = ControlSchedule::constant(PlanePoint::new(0.0, 0.5));
        let c = concat(&p, tau, &a).unwrap();
        assert_eq!(c.eval(0.5), PlanePoint::new(0.0, -1.0));
        assert_eq!(c.eval(3.5), PlanePoint::new(0.0, 0.5));
        assert_eq!(c.f_inf(), 1.0);
    }
}
