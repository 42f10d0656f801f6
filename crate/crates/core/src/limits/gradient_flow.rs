//! The gradient flow `ż = −∇d(z)` whose long-time limit defines the projection onto `Γ`.

use serde::Serialize;

use crate::dynamics::rk;
use crate::error::Result;
use crate::geometry::{penalty, penalty_gradient, Branch, NetworkPoint, PlanePoint};

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_time: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-16,
            max_time: 1e18,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientFlowResult {
    pub times: Vec<f64>,
    pub path: Vec<PlanePoint>,
    /// Dominant coordinate of the stopping state, placed on its axis.
    pub limit: NetworkPoint,
    pub stop_time: f64,
    /// `d` fell below the stopping tolerance before `max_time`.
    pub converged: bool,
    /// `max |z2² − z1² − (x2² − x1²)|` along the path.
    pub hyperbola_drift: f64,
    /// `d` never increased between samples.
    pub monotone: bool,
}

pub fn gradient_flow(x: PlanePoint, stop_tol: f64) -> Result<GradientFlowResult> {
    gradient_flow_with(x, stop_tol, &FlowOptions::default())
}

pub fn gradient_flow_with(x: PlanePoint, stop_tol: f64, opts: &FlowOptions) -> Result<GradientFlowResult> {
    if !(stop_tol > 0.0) {
        return Err(crate::Error::InvalidInput("stop_tol must be positive".into()));
    }
    let rhs = |_t: f64, y: &[f64; 2], _tl: f64| {
        let g = penalty_gradient(PlanePoint::new(y[0], y[1]));
        [-g.x1, -g.x2]
    };
    let cap = |_t: f64, y: &[f64; 2]| {
        let (a, b) = (y[0], y[1]);
        let r2 = a * a + b * b;
        let lam = r2 + (r2 * r2 + 12.0 * a * a * b * b).sqrt();
        2.5 / (lam + f64::MIN_POSITIVE)
    };
    let halt = |_t: f64, y: &[f64; 2]| penalty(PlanePoint::new(y[0], y[1])) < stop_tol;
    let o = rk::Options {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: opts.max_steps,
        h_init: None,
        error_dims: None,
    };
    let sol = rk::integrate_until(rhs, cap, halt, 0.0, [x.x1, x.x2], opts.max_time, &[], &o)?;

    let mut times = vec![0.0];
    let mut path = vec![x];
    for s in &sol.steps {
        times.push(s.t1);
        path.push(PlanePoint::new(s.y1[0], s.y1[1]));
    }
    let end = *path.last().unwrap();
    let g0 = x.x2 * x.x2 - x.x1 * x.x1;
    let hyperbola_drift = path
        .iter()
        .map(|p| (p.x2 * p.x2 - p.x1 * p.x1 - g0).abs())
        .fold(0.0, f64::max);
    let monotone = path.windows(2).all(|w| penalty(w[1]) <= penalty(w[0]));
    let limit = dominant_axis_point(end);
    Ok(GradientFlowResult {
        stop_time: *times.last().unwrap(),
        converged: penalty(end) < stop_tol,
        times,
        path,
        limit,
        hyperbola_drift,
        monotone,
    })
}

fn dominant_axis_point(p: PlanePoint) -> NetworkPoint {
    let (a1, a2) = (p.x1.abs(), p.x2.abs());
    let (b, r) = if a2 >= a1 {
        (if p.x2 > 0.0 { Branch::N } else { Branch::S }, a2)
    } else {
        (if p.x1 > 0.0 { Branch::E } else { Branch::W }, a1)
    };
    NetworkPoint::new(if r == 0.0 { Branch::O } else { b }, r).expect("finite radius")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project_to_network;

    #[test]
    fn equilibrium_on_network() {
        let r = gradient_flow(PlanePoint::new(0.0, 3.0), 1e-20).unwrap();
        assert_eq!(r.path.len(), 1);
        assert_eq!(r.limit, NetworkPoint::new(Branch::N, 3.0).unwrap());
        assert_eq!(r.stop_time, 0.0);
    }

    #[test]
    fn flow_limit_matches_closed_form() {
        let r = gradient_flow(PlanePoint::new(1.0, 2.0), 1e-20).unwrap();
        assert!(r.converged && r.monotone);
        assert_eq!(r.limit.branch(), Branch::N);
        assert!((r.limit.radius() - 3f64.sqrt()).abs() < 1e-9);
        assert!(r.hyperbola_drift < 1e-8);
    }

    #[test]
    fn flow_agrees_with_projection_in_every_quadrant() {
        for p in [
            PlanePoint::new(-2.0, 0.5),
            PlanePoint::new(0.3, -1.7),
            PlanePoint::new(3.0, -2.9),
            PlanePoint::new(-0.01, 0.02),
        ] {
            let r = gradient_flow(p, 1e-22).unwrap();
            let q = project_to_network(p);
            assert_eq!(r.limit.branch(), q.branch(), "{p}");
            assert!((r.limit.radius() - q.radius()).abs() < 1e-6, "{p}");
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(gradient_flow(PlanePoint::new(1.0, 2.0), 0.0).is_err());
    }
}
