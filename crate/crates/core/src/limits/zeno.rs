//! A control whose limit path returns to the junction at every dyadic time `2^(−k)` and
//! visits a prescribed cycle of branches in between.

use crate::dynamics::ControlSchedule;
use crate::error::{Error, Result};
use crate::geometry::{Branch, PlanePoint};

use super::trajectory::{LimitTrajectory, Segment};

/// Branch visited on `(2^(−k−1), 2^(−k))`.
pub fn zeno_branch(cycle: &[Branch], k: usize) -> Branch {
    cycle[k % cycle.len()]
}

/// Builds `α = Σ_{k<depth} β_k` on `[0, 1]` with `β_k = e_{i(k)}` on
/// `(2^(−k−1), 3·2^(−k−2))`, `β_k = −e_{i(k)}` on `(3·2^(−k−2), 2^(−k))`, and `α = 0`
/// elsewhere, together with the limit path from `O`. Before `2^(−depth)` and after `1` the
/// path sits at `O`.
pub fn zeno_control(cycle: &[Branch], depth: usize) -> Result<(ControlSchedule, LimitTrajectory)> {
    if depth == 0 {
        return Err(Error::InvalidInput("zeno depth must be at least 1".into()));
    }
    if cycle.is_empty() || cycle.contains(&Branch::O) {
        return Err(Error::InvalidInput("zeno cycle must list edge branches".into()));
    }
    if depth > 1000 {
        return Err(Error::InvalidInput("zeno depth too large for double precision".into()));
    }
    let mut breakpoints = vec![0.0];
    let mut values = vec![PlanePoint::ORIGIN];
    let t_first = 0.5f64.powi(depth as i32);
    let mut segments = vec![Segment::at_junction(0.0, t_first)];
    for k in (0..depth).rev() {
        let lo = 0.5f64.powi(k as i32 + 1);
        let mid = 1.5 * lo;
        let hi = 2.0 * lo;
        let e = zeno_branch(cycle, k).unit();
        breakpoints.push(lo);
        values.push(e);
        breakpoints.push(mid);
        values.push(-e);
        segments.push(Segment::affine(lo, mid, zeno_branch(cycle, k), PlanePoint::ORIGIN, e));
        segments.push(Segment::affine(mid, hi, zeno_branch(cycle, k), e * (mid - lo), -e));
    }
    breakpoints.push(1.0);
    values.push(PlanePoint::ORIGIN);
    segments.push(Segment::at_junction(1.0, f64::INFINITY));
    // piece boundaries are exact dyadics, so the schedule is strictly increasing
    let control = ControlSchedule::new(breakpoints, values, 1.0)?;
    Ok((control, LimitTrajectory::new(segments)))
}
