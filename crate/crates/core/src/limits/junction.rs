//! Limit dynamics inside the branches and through the junction for piecewise-constant
//! controls.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use crate::dynamics::{first_time, integrate_perturbed, ControlSchedule, IntegratorConfig};
use crate::error::{Error, Result};
use crate::geometry::{penalty_gradient, rotate_quarter, Branch, NetworkPoint, PlanePoint};

use super::trajectory::{LimitTrajectory, Segment, SegmentState};

/// Angles closer than this to a bisector or to a case boundary are snapped onto it.
pub const ANGLE_TOL: f64 = 1e-9;

/// Result of running the tangential dynamics inside one branch.
#[derive(Debug, Clone)]
pub struct EdgeRun {
    pub trajectory: LimitTrajectory,
    /// `∫⟨f, e⊥⟩ e⊥` over the run.
    pub k_increment: PlanePoint,
    /// Time the junction was reached, if it was.
    pub hit_time: Option<f64>,
}

/// Inside a branch the limit moves by `⟨f, e⟩ e` and the reflection term absorbs
/// `⟨f, e⊥⟩ e⊥`. Runs on `interval` or until the junction is reached.
pub fn edge_limit_dynamics(start: NetworkPoint, alpha: &ControlSchedule, interval: (f64, f64)) -> Result<EdgeRun> {
    if start.branch() == Branch::O {
        return Err(Error::InvalidInput("edge dynamics need a start inside a branch".into()));
    }
    let (a, b) = interval;
    if !(b >= a) {
        return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
    }
    let e = start.branch().unit();
    let en = e.perp();
    let mut r = start.radius();
    let mut t = a;
    let mut k = PlanePoint::ORIGIN;
    let mut segments = Vec::new();
    let bps = alpha.breakpoints();
    loop {
        let i = alpha.piece_index(t);
        let piece_end = bps.get(i + 1).copied().unwrap_or(f64::INFINITY).min(b);
        let u = alpha.values()[i];
        let vr = u.dot(e);
        let vn = u.dot(en);
        let mut end = piece_end;
        let mut hit = None;
        if vr < 0.0 && r + vr * (piece_end - t) <= 0.0 {
            end = t + r / (-vr);
            hit = Some(end);
        }
        segments.push(Segment::affine(t, end, start.branch(), e * r, e * vr));
        k += en * (vn * (end - t));
        if hit.is_some() {
            return Ok(EdgeRun {
                trajectory: LimitTrajectory::new(segments),
                k_increment: k,
                hit_time: hit,
            });
        }
        r += vr * (end - t);
        t = end;
        if t >= b {
            return Ok(EdgeRun {
                trajectory: LimitTrajectory::new(segments),
                k_increment: k,
                hit_time: None,
            });
        }
    }
}

/// Branch entered from the junction under control `u`: the unique maximizer of `⟨u, e_i⟩`
/// when that maximum is positive, `None` on ties or for a vanishing control. Scores within
/// `ANGLE_TOL·max(|u|, 1)` count as equal.
pub fn junction_exit(u: PlanePoint) -> Option<Branch> {
    let scores: Vec<f64> = Branch::EDGES.iter().map(|b| u.dot(b.unit())).collect();
    let (imax, &m) = scores
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let tie_tol = ANGLE_TOL * u.norm().max(1.0);
    if m <= tie_tol {
        return None;
    }
    let ties = scores.iter().filter(|&&s| (s - m).abs() <= tie_tol).count();
    if ties > 1 {
        None
    } else {
        Some(Branch::EDGES[imax])
    }
}

/// Drives a network point with a control that is tangent to the branch it acts on. At the
/// junction the state leaves along [`junction_exit`] or stays put.
pub fn drive_on_network(start: NetworkPoint, alpha: &ControlSchedule, horizon: f64) -> LimitTrajectory {
    let mut segments: Vec<Segment> = Vec::new();
    let mut t = 0.0;
    let mut pos = start;
    let bps = alpha.breakpoints();
    while t < horizon {
        let i = alpha.piece_index(t);
        let piece_end = bps.get(i + 1).copied().unwrap_or(f64::INFINITY).min(horizon);
        let u = alpha.values()[i];
        if pos.branch() == Branch::O {
            match junction_exit(u) {
                None => {
                    segments.push(Segment::at_junction(t, piece_end));
                    t = piece_end;
                }
                Some(b) => {
                    let e = b.unit();
                    let s = u.dot(e);
                    segments.push(Segment::affine(t, piece_end, b, PlanePoint::ORIGIN, e * s));
                    pos = NetworkPoint::new(b, s * (piece_end - t)).expect("finite");
                    t = piece_end;
                }
            }
        } else {
            let run = edge_limit_dynamics(pos, alpha, (t, piece_end)).expect("start inside a branch");
            let end = run.trajectory.end();
            let p = run.trajectory.state_at(end);
            segments.extend(run.trajectory.segments);
            t = end;
            pos = if run.hit_time.is_some() {
                NetworkPoint::JUNCTION
            } else {
                NetworkPoint::new(pos.branch(), p.norm()).expect("finite")
            };
        }
    }
    merge_segments(segments)
}

/// Merges consecutive junction segments and drops empty ones (keeping at least one).
fn merge_segments(segs: Vec<Segment>) -> LimitTrajectory {
    let mut out: Vec<Segment> = Vec::new();
    for s in segs {
        if s.t1 <= s.t0 && !out.is_empty() {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if last.location == Branch::O && s.location == Branch::O {
                last.t1 = s.t1;
                continue;
            }
            if last.t1 <= last.t0 {
                *last = s;
                continue;
            }
        }
        out.push(s);
    }
    LimitTrajectory::new(out)
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU - ANGLE_TOL {
        0.0
    } else {
        t
    }
}

/// Whether `theta` is one of the four bisectors `π/4 + kπ/2`.
pub fn is_bisector(theta: f64) -> bool {
    let m = normalize_angle(theta).rem_euclid(FRAC_PI_2);
    (m - FRAC_PI_4).abs() <= ANGLE_TOL
}

fn rotate_segment(s: Segment, q: i32) -> Segment {
    let state = match s.state {
        SegmentState::Affine { p0, v } => SegmentState::Affine {
            p0: rotate_quarter(p0, q),
            v: rotate_quarter(v, q),
        },
        SegmentState::Sampled { times, states } => SegmentState::Sampled {
            times,
            states: states.into_iter().map(|p| rotate_quarter(p, q)).collect(),
        },
    };
    Segment {
        t0: s.t0,
        t1: s.t1,
        location: s.location.rotate(q),
        state,
    }
}

/// Closed-form limit path under the constant control `e_θ`, on `[0, ∞)`.
///
/// From `O`: a non-bisector angle enters the branch maximizing `⟨e_θ, e_i⟩` at that speed,
/// a bisector stays at `O`. From a branch point the problem is rotated onto `N` and:
/// `θ ∈ [0, π]` never reaches `O`; `θ ∈ (π, 5π/4]` goes through `O` into `W`;
/// `θ ∈ (5π/4, 7π/4)` continues into `S`; `θ ∈ [7π/4, 2π)` turns into `E`.
pub fn constant_control_limit(start: NetworkPoint, theta: f64) -> Result<LimitTrajectory> {
    if !theta.is_finite() {
        return Err(Error::InvalidInput("theta must be finite".into()));
    }
    let th = normalize_angle(theta);
    if start.branch() == Branch::O {
        if is_bisector(th) {
            return Ok(LimitTrajectory::new(vec![Segment::at_junction(0.0, f64::INFINITY)]));
        }
        let i = ((th / FRAC_PI_2).round() as usize) % 4;
        let b = Branch::EDGES[i];
        let speed = PlanePoint::polar(th).dot(b.unit());
        return Ok(LimitTrajectory::new(vec![Segment::affine(
            0.0,
            f64::INFINITY,
            b,
            PlanePoint::ORIGIN,
            b.unit() * speed,
        )]));
    }

    // rotate the start onto N
    let q = start.branch().index().unwrap() as i32 - 1;
    let th_n = normalize_angle(th - q as f64 * FRAC_PI_2);
    let r = start.radius();
    let (s, c) = th_n.sin_cos();
    let p0 = PlanePoint::new(0.0, r);

    let segs = if th_n <= PI + ANGLE_TOL {
        let v = PlanePoint::new(0.0, s.max(0.0));
        vec![Segment::affine(0.0, f64::INFINITY, Branch::N, p0, v)]
    } else {
        let t_hit = r / (-s);
        let down = Segment::affine(0.0, t_hit, Branch::N, p0, PlanePoint::new(0.0, s));
        let after = if th_n <= 5.0 * FRAC_PI_4 + ANGLE_TOL {
            Segment::affine(t_hit, f64::INFINITY, Branch::W, PlanePoint::ORIGIN, PlanePoint::new(c, 0.0))
        } else if th_n < 7.0 * FRAC_PI_4 - ANGLE_TOL {
            Segment::affine(t_hit, f64::INFINITY, Branch::S, PlanePoint::ORIGIN, PlanePoint::new(0.0, s))
        } else {
            Segment::affine(t_hit, f64::INFINITY, Branch::E, PlanePoint::ORIGIN, PlanePoint::new(c, 0.0))
        };
        vec![down, after]
    };
    Ok(LimitTrajectory::new(segs.into_iter().map(|sg| rotate_segment(sg, q)).collect()))
}

/// Stationary point `x^θ` of `x ↦ e_θ − ∇d(x)/ε` in the third quadrant, defined when both
/// `cos θ` and `sin θ` are negative.
pub fn equilibrium_point(theta: f64, eps: f64) -> Option<PlanePoint> {
    let (s, c) = theta.sin_cos();
    if !(c < 0.0 && s < 0.0) {
        return None;
    }
    let e3 = eps.cbrt();
    let x1 = -(s * s / (2.0 * (-c))).cbrt();
    let x2 = -(c * c / (2.0 * (-s))).cbrt();
    Some(PlanePoint::new(x1 * e3, x2 * e3))
}

/// `e_θ − ∇d(x)/ε`.
pub fn penalized_field(x: PlanePoint, theta: f64, eps: f64) -> PlanePoint {
    PlanePoint::polar(theta) - penalty_gradient(x) * (1.0 / eps)
}

/// Lower bound `−(3/2)(−cos θ)/(−sin θ)^(2/3) ε^(1/3)` on the first-crossing abscissa.
pub fn eta_lower_bound(theta: f64, eps: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    -1.5 * (-c) / (-s).powf(2.0 / 3.0) * eps.cbrt()
}

/// First time `t_ε` at which the path from `e_N` under `e_θ` reaches `x2 = 0`, and the
/// abscissa `η_ε` there.
pub fn first_crossing(theta: f64, eps: f64, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    let s = theta.sin();
    if !(s < 0.0) {
        return Err(Error::InvalidInput("first crossing needs sin θ < 0".into()));
    }
    let mut cfg = *cfg;
    cfg.horizon = 1.0 / (-s) * 1.05 + 0.01;
    let tr = integrate_perturbed(PlanePoint::new(0.0, 1.0), &ControlSchedule::direction(theta), eps, &cfg)?;
    let t = first_time(&tr, |p| p.x2 <= 0.0).ok_or(Error::HorizonTooShort {
        horizon: cfg.horizon,
        entry: f64::NAN,
    })?;
    Ok((t, tr.state_at(t).x1))
}
