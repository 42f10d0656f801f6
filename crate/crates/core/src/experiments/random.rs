//! Seeded random starting points and piecewise-constant controls.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::ControlSchedule;
use crate::error::Result;
use crate::geometry::PlanePoint;

use super::config::RandomControls;

pub(crate) fn point_in_box(rng: &mut ChaCha8Rng, half: f64) -> PlanePoint {
    PlanePoint::new(rng.gen_range(-half..=half), rng.gen_range(-half..=half))
}

/// Uniform in the disc of radius `r`.
pub(crate) fn point_in_disc(rng: &mut ChaCha8Rng, r: f64) -> PlanePoint {
    let rho = r * rng.gen::<f64>().sqrt();
    PlanePoint::polar(rng.gen_range(0.0..TAU)) * rho
}

/// `rc.pieces` equal pieces on `[0, horizon]`, values uniform in the disc of radius `f_inf`.
pub(crate) fn control(rng: &mut ChaCha8Rng, rc: &RandomControls, horizon: f64) -> Result<ControlSchedule> {
    let n = rc.pieces;
    let breaks: Vec<f64> = (0..n).map(|i| horizon * i as f64 / n as f64).collect();
    let values: Vec<PlanePoint> = (0..n).map(|_| point_in_disc(rng, rc.f_inf)).collect();
    ControlSchedule::new(breaks, values, rc.f_inf)
}

/// `(x, α)` pairs drawn in order from one generator.
pub(crate) fn samples(rng: &mut ChaCha8Rng, rc: &RandomControls, horizon: f64) -> Result<Vec<(PlanePoint, ControlSchedule)>> {
    (0..rc.samples)
        .map(|_| {
            let x = point_in_box(rng, rc.box_half);
            Ok((x, control(rng, rc, horizon)?))
        })
        .collect()
}
