use serde_json::{json, Value};

use crate::dynamics::TrajectoryRecord;
use crate::geometry::{nearest_branch, Branch, NetworkPoint, PlanePoint};

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentState {
    /// `X(t) = p0 + v (t − t0)`.
    Affine { p0: PlanePoint, v: PlanePoint },
    Sampled { times: Vec<f64>, states: Vec<PlanePoint> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t0: f64,
    /// May be infinite for the last segment.
    pub t1: f64,
    pub location: Branch,
    pub state: SegmentState,
}

impl Segment {
    pub fn affine(t0: f64, t1: f64, location: Branch, p0: PlanePoint, v: PlanePoint) -> Self {
        Self {
            t0,
            t1,
            location,
            state: SegmentState::Affine { p0, v },
        }
    }

    pub fn at_junction(t0: f64, t1: f64) -> Self {
        Self::affine(t0, t1, Branch::O, PlanePoint::ORIGIN, PlanePoint::ORIGIN)
    }

    pub fn state_at(&self, t: f64) -> PlanePoint {
        match &self.state {
            SegmentState::Affine { p0, v } => {
                if t == self.t0 {
                    *p0
                } else {
                    *p0 + *v * (t - self.t0)
                }
            }
            SegmentState::Sampled { times, states } => {
                let i = times.partition_point(|&s| s <= t);
                if i == 0 {
                    return states[0];
                }
                if i >= times.len() {
                    return *states.last().unwrap();
                }
                let (a, b) = (times[i - 1], times[i]);
                let w = if b > a { (t - a) / (b - a) } else { 0.0 };
                states[i - 1] * (1.0 - w) + states[i] * w
            }
        }
    }

    /// Largest speed on the segment.
    pub fn max_speed(&self) -> f64 {
        match &self.state {
            SegmentState::Affine { v, .. } => v.norm(),
            SegmentState::Sampled { times, states } => times
                .windows(2)
                .zip(states.windows(2))
                .filter(|(t, _)| t[1] > t[0])
                .map(|(t, s)| s[1].dist(s[0]) / (t[1] - t[0]))
                .fold(0.0, f64::max),
        }
    }

    fn to_json(&self) -> Value {
        let t1 = if self.t1.is_finite() { json!(self.t1) } else { json!("inf") };
        match &self.state {
            SegmentState::Affine { p0, v } => json!({
                "t0": self.t0,
                "t1": t1,
                "branch": self.location.as_str(),
                "p0": [p0.x1, p0.x2],
                "v": [v.x1, v.x2],
            }),
            SegmentState::Sampled { times, states } => json!({
                "t0": self.t0,
                "t1": t1,
                "branch": self.location.as_str(),
                "times": times,
                "states": states.iter().map(|p| [p.x1, p.x2]).collect::<Vec<_>>(),
            }),
        }
    }
}

/// Limit path on the network as consecutive segments, each inside one branch or at `O`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTrajectory {
    pub segments: Vec<Segment>,
    /// `(x, x̄)`: the limit path jumps from `x` to `x̄ = φ_d(x)` at `t = 0+`.
    pub initial_jump: Option<(PlanePoint, PlanePoint)>,
}

impl LimitTrajectory {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self {
            segments,
            initial_jump: None,
        }
    }

    pub fn start(&self) -> f64 {
        self.segments.first().map(|s| s.t0).unwrap_or(0.0)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map(|s| s.t1).unwrap_or(0.0)
    }

    fn segment_index(&self, t: f64) -> usize {
        let i = self.segments.partition_point(|s| s.t1 < t);
        i.min(self.segments.len() - 1)
    }

    pub fn state_at(&self, t: f64) -> PlanePoint {
        self.segments[self.segment_index(t)].state_at(t)
    }

    /// Branch occupied at `t`; the junction when the state is at `O`.
    pub fn branch_at(&self, t: f64) -> Branch {
        let s = &self.segments[self.segment_index(t)];
        if s.location == Branch::O || s.state_at(t) == PlanePoint::ORIGIN {
            Branch::O
        } else {
            s.location
        }
    }

    pub fn network_point_at(&self, t: f64) -> NetworkPoint {
        let p = self.state_at(t);
        match self.branch_at(t) {
            Branch::O => NetworkPoint::JUNCTION,
            b => NetworkPoint::new(b, p.norm()).expect("finite state"),
        }
    }

    /// Intervals spent at the junction.
    pub fn junction_intervals(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .filter(|s| s.location == Branch::O)
            .map(|s| (s.t0, s.t1))
            .collect()
    }

    /// Checks that segments tile their span, stay on their branch, and move no faster than
    /// `f_inf`. Returns a description of the first failure.
    pub fn validate(&self, f_inf: f64, tol: f64) -> std::result::Result<(), String> {
        if self.segments.is_empty() {
            return Err("no segments".into());
        }
        for w in self.segments.windows(2) {
            if (w[0].t1 - w[1].t0).abs() > tol {
                return Err(format!("gap between {} and {}", w[0].t1, w[1].t0));
            }
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.t1 >= s.t0) {
                return Err(format!("segment {i} has reversed interval"));
            }
            if s.max_speed() > f_inf * (1.0 + tol) + tol {
                return Err(format!("segment {i} speed {} above {f_inf}", s.max_speed()));
            }
            let probes: Vec<f64> = match &s.state {
                SegmentState::Affine { .. } => {
                    let end = if s.t1.is_finite() { s.t1 } else { s.t0 + 1.0 };
                    vec![s.t0, 0.5 * (s.t0 + end), end]
                }
                SegmentState::Sampled { times, .. } => times.clone(),
            };
            for t in probes {
                let p = s.state_at(t);
                let ok = match s.location {
                    Branch::O => p.norm() <= tol,
                    b => {
                        let e = b.unit();
                        (p - e * p.dot(e)).norm() <= tol && p.dot(e) >= -tol
                    }
                };
                if !ok {
                    return Err(format!("segment {i} leaves {} at t = {t}: {p}", s.location));
                }
            }
        }
        Ok(())
    }

    /// Concatenates `other`, which must start where `self` ends.
    pub fn extend(&mut self, other: LimitTrajectory) {
        self.segments.extend(other.segments);
    }

    /// Reads a limit trajectory off sampled data: a sample is at `O` when both coordinates
    /// are within `tau`, otherwise on its nearest branch; runs of equal location merge.
    pub fn from_samples(times: &[f64], states: &[PlanePoint], tau: f64) -> Self {
        let mut segments: Vec<Segment> = Vec::new();
        let mut cur: Option<(Branch, Vec<f64>, Vec<PlanePoint>)> = None;
        for (&t, &p) in times.iter().zip(states) {
            let b = nearest_branch(p, tau);
            let proj = match b {
                Branch::O => PlanePoint::ORIGIN,
                b => b.unit() * p.dot(b.unit()).max(0.0),
            };
            match &mut cur {
                Some((cb, ts, ps)) if *cb == b => {
                    ts.push(t);
                    ps.push(proj);
                }
                _ => {
                    if let Some((cb, ts, ps)) = cur.take() {
                        segments.push(Segment {
                            t0: ts[0],
                            t1: t,
                            location: cb,
                            state: SegmentState::Sampled { times: ts, states: ps },
                        });
                    }
                    cur = Some((b, vec![t], vec![proj]));
                }
            }
        }
        if let Some((cb, ts, ps)) = cur {
            segments.push(Segment {
                t0: ts[0],
                t1: *ts.last().unwrap(),
                location: cb,
                state: SegmentState::Sampled { times: ts, states: ps },
            });
        }
        Self::new(segments)
    }

    pub fn from_trajectory(traj: &TrajectoryRecord, tau: f64) -> Self {
        Self::from_samples(&traj.times, &traj.states, tau)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "initial_jump": self.initial_jump.map(|(x, xb)| json!({"x": [x.x1, x.x2], "xbar": [xb.x1, xb.x2]})),
            "segments": self.segments.iter().map(Segment::to_json).collect::<Vec<_>>(),
        })
    }

    /// Sequence of locations visited, with consecutive repeats removed.
    pub fn itinerary(&self) -> Vec<Branch> {
        let mut out: Vec<Branch> = Vec::new();
        for s in &self.segments {
            if out.last() != Some(&s.location) {
                out.push(s.location);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LimitTrajectory {
        LimitTrajectory::new(vec![
            Segment::affine(0.0, 1.0, Branch::N, PlanePoint::new(0.0, 1.0), PlanePoint::new(0.0, -1.0)),
            Segment::at_junction(1.0, 2.0),
            Segment::affine(2.0, f64::INFINITY, Branch::E, PlanePoint::ORIGIN, PlanePoint::new(0.5, 0.0)),
        ])
    }

    #[test]
    fn evaluation_and_branches() {
        let l = sample();
        assert_eq!(l.state_at(0.25), PlanePoint::new(0.0, 0.75));
        assert_eq!(l.branch_at(0.25), Branch::N);
        assert_eq!(l.branch_at(1.0), Branch::O);
        assert_eq!(l.branch_at(1.5), Branch::O);
        assert_eq!(l.state_at(4.0), PlanePoint::new(1.0, 0.0));
        assert_eq!(l.junction_intervals(), vec![(1.0, 2.0)]);
        assert_eq!(l.itinerary(), vec![Branch::N, Branch::O, Branch::E]);
        assert!(l.validate(1.0, 1e-12).is_ok());
        assert!(l.validate(0.4, 1e-12).is_err());
    }

    #[test]
    fn validation_catches_off_branch_states() {
        let l = LimitTrajectory::new(vec![Segment::affine(
            0.0,
            1.0,
            Branch::N,
            PlanePoint::new(0.0, 1.0),
            PlanePoint::new(0.1, 0.0),
        )]);
        assert!(l.validate(1.0, 1e-9).is_err());
    }

    #[test]
    fn json_marks_infinite_end() {
        let v = sample().to_json();
        assert_eq!(v["segments"][2]["t1"], "inf");
        assert_eq!(v["segments"][0]["branch"], "N");
    }

    #[test]
    fn extraction_from_samples() {
        let times = [0.0, 0.5, 1.0, 1.5, 2.0];
        let states = [
            PlanePoint::new(1e-12, 1.0),
            PlanePoint::new(0.0, 0.5),
            PlanePoint::new(1e-12, -1e-12),
            PlanePoint::new(-0.5, 1e-13),
            PlanePoint::new(-1.0, 0.0),
        ];
        let l = LimitTrajectory::from_samples(&times, &states, 1e-9);
        assert_eq!(l.itinerary(), vec![Branch::N, Branch::O, Branch::W]);
        assert_eq!(l.segments[0].t1, 1.0);
        assert_eq!(l.state_at(2.0), PlanePoint::new(-1.0, 0.0));
    }
}
