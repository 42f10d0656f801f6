use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PlanePoint;

/// Piecewise-constant control. Piece `i` holds on `[breakpoints[i], breakpoints[i+1])`
/// and the last piece extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    breakpoints: Vec<f64>,
    values: Vec<PlanePoint>,
    f_inf: f64,
}

/// Slack allowed when checking `|value| <= f_inf`.
const BOUND_SLACK: f64 = 1e-12;

fn snapped_polar(theta: f64) -> PlanePoint {
    const SNAP: f64 = 1e-9;
    let (s, c) = theta.sin_cos();
    if (c.abs() - s.abs()).abs() <= SNAP {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PlanePoint::new(h.copysign(c), h.copysign(s))
    } else if c.abs() <= SNAP {
        PlanePoint::new(0.0, s.signum())
    } else if s.abs() <= SNAP {
        PlanePoint::new(c.signum(), 0.0)
    } else {
        PlanePoint::new(c, s)
    }
}

impl ControlSchedule {
    pub fn new(breakpoints: Vec<f64>, values: Vec<PlanePoint>, f_inf: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidInput(
                "control needs one value per breakpoint and at least one piece".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidInput("control breakpoints must start at 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("control breakpoints must be strictly increasing".into()));
        }
        if !(f_inf >= 0.0) || !f_inf.is_finite() {
            return Err(Error::InvalidInput(format!("bad control bound {f_inf}")));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || v.norm() > f_inf * (1.0 + BOUND_SLACK) + BOUND_SLACK {
                return Err(Error::InvalidInput(format!(
                    "control piece {i} has |a| = {} above bound {f_inf}",
                    v.norm()
                )));
            }
        }
        Ok(Self {
            breakpoints,
            values,
            f_inf,
        })
    }

    /// Constant control with bound `|a|`.
    pub fn constant(a: PlanePoint) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![a],
            f_inf: a.norm(),
        }
    }

    /// Constant control with an explicit bound.
    pub fn constant_bounded(a: PlanePoint, f_inf: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![a], f_inf)
    }

    /// Constant unit control `e_theta`. Angles within `1e-9` of an axis or a bisector get
    /// exactly symmetric components, so the penalized dynamics keep their mirror symmetry.
    pub fn direction(theta: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![snapped_polar(theta)],
            f_inf: 1.0,
        }
    }

    /// Builds a schedule from consecutive `(duration, value)` pieces; the last value
    /// persists after the final piece ends.
    pub fn from_pieces(pieces: &[(f64, PlanePoint)], tail: PlanePoint, f_inf: f64) -> Result<Self> {
        let mut b = Vec::with_capacity(pieces.len() + 1);
        let mut v = Vec::with_capacity(pieces.len() + 1);
        let mut t = 0.0;
        for &(dt, a) in pieces {
            if dt <= 0.0 {
                continue;
            }
            b.push(t);
            v.push(a);
            t += dt;
        }
        b.push(t);
        v.push(tail);
        Self::new(b, v, f_inf)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[PlanePoint] {
        &self.values
    }

    pub fn f_inf(&self) -> f64 {
        self.f_inf
    }

    pub fn piece_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, t: f64) -> PlanePoint {
        self.values[self.piece_index(t)]
    }

    /// Exact `∫_0^t α`.
    pub fn integral(&self, t: f64) -> PlanePoint {
        let mut acc = PlanePoint::ORIGIN;
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if b >= t {
                break;
            }
            let end = self.breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
            acc += self.values[i] * (end - b);
        }
        acc
    }

    /// Interior breakpoints strictly inside `(0, t_end)`.
    pub fn switch_times(&self, t_end: f64) -> Vec<f64> {
        self.breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < t_end)
            .collect()
    }

    /// Same control run at speed `rho`: `t -> α(ρ t)`.
    pub fn time_scaled(&self, rho: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|b| b / rho).collect(),
            values: self.values.clone(),
            f_inf: self.f_inf,
        }
    }

    /// Every value mapped through `g`; the bound is kept.
    pub fn map_values(&self, g: impl Fn(PlanePoint) -> PlanePoint) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| g(v)).collect(),
            f_inf: self.f_inf,
        }
    }

    /// Parses `a1,a2` for a constant control or `t0:a1,a2;t1:a1,a2;...` for a schedule.
    pub fn parse(spec: &str, f_inf: Option<f64>) -> Result<Self> {
        let parse_pt = |s: &str| -> Result<PlanePoint> {
            let mut it = s.split(',').map(|c| c.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok(PlanePoint::new(a, b)),
                _ => Err(Error::InvalidInput(format!("cannot parse control value `{s}`"))),
            }
        };
        let spec = spec.trim();
        if !spec.contains(':') {
            let a = parse_pt(spec)?;
            return Self::new(vec![0.0], vec![a], f_inf.unwrap_or(a.norm()));
        }
        let mut b = Vec::new();
        let mut v = Vec::new();
        for piece in spec.split(';').filter(|p| !p.trim().is_empty()) {
            let (t, a) = piece
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("control piece `{piece}` lacks `t:`")))?;
            b.push(
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad time `{t}`")))?,
            );
            v.push(parse_pt(a)?);
        }
        let bound = f_inf.unwrap_or_else(|| v.iter().map(|p| p.norm()).fold(0.0, f64::max));
        Self::new(b, v, bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sched() -> ControlSchedule {
        ControlSchedule::new(
            vec![0.0, 1.0, 2.5],
            vec![PlanePoint::new(1.0, 0.0), PlanePoint::new(0.0, -1.0), PlanePoint::new(0.5, 0.5)],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn eval_is_right_continuous() {
        let c = sched();
        assert_eq!(c.eval(0.0), PlanePoint::new(1.0, 0.0));
        assert_eq!(c.eval(0.999), PlanePoint::new(1.0, 0.0));
        assert_eq!(c.eval(1.0), PlanePoint::new(0.0, -1.0));
        assert_eq!(c.eval(100.0), PlanePoint::new(0.5, 0.5));
    }

    #[test]
    fn integral_is_exact() {
        let c = sched();
        let i = c.integral(3.0);
        assert_relative_eq!(i.x1, 1.0 + 0.25, max_relative = 1e-15);
        assert_relative_eq!(i.x2, -1.5 + 0.25, max_relative = 1e-15);
        assert_eq!(c.integral(0.0), PlanePoint::ORIGIN);
        assert_relative_eq!(c.integral(0.5).x1, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ControlSchedule::new(vec![0.0], vec![PlanePoint::new(2.0, 0.0)], 1.0).is_err());
        assert!(ControlSchedule::new(vec![0.5], vec![PlanePoint::ORIGIN], 1.0).is_err());
        assert!(ControlSchedule::new(
            vec![0.0, 1.0, 1.0],
            vec![PlanePoint::ORIGIN; 3],
            1.0
        )
        .is_err());
        assert!(ControlSchedule::new(vec![], vec![], 1.0).is_err());
    }

    #[test]
    fn parse_forms() {
        let c = ControlSchedule::parse("0,-1", None).unwrap();
        assert_eq!(c.eval(3.0), PlanePoint::new(0.0, -1.0));
        assert_eq!(c.f_inf(), 1.0);
        let c = ControlSchedule::parse("0:1,0; 0.5:0,1", Some(1.0)).unwrap();
        assert_eq!(c.eval(0.7), PlanePoint::new(0.0, 1.0));
        assert!(ControlSchedule::parse("0:1", None).is_err());
    }

    #[test]
    fn from_pieces_and_scaling() {
        let c = ControlSchedule::from_pieces(
            &[(0.5, PlanePoint::new(0.0, 1.0)), (0.0, PlanePoint::new(9.0, 9.0)), (0.25, PlanePoint::new(1.0, 0.0))],
            PlanePoint::ORIGIN,
            1.0,
        )
        .unwrap();
        assert_eq!(c.breakpoints(), &[0.0, 0.5, 0.75]);
        let s = c.time_scaled(2.0);
        assert_eq!(s.breakpoints(), &[0.0, 0.25, 0.375]);
        assert_eq!(s.eval(0.3), c.eval(0.6));
        assert_eq!(c.switch_times(0.6), vec![0.5]);
    }
}
