//! With the control-dependent cost `ℓ(x, a) = 2 + a1 + a2 + |x2|`, leaving the network
//! through the junction from `e_N` is strictly cheaper than any network-confined control.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use serde::Serialize;

use crate::dynamics::ControlSchedule;
use crate::error::{Error, Result};
use crate::geometry::{Branch, NetworkPoint};
use crate::limits::constant_control_limit;

use super::cost::{cost_functional, CostField, LimitPath, ValueProblem};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CounterexampleCosts {
    pub lambda: f64,
    /// Cost of the limit path under `e_{5π/4}`.
    pub upper: f64,
    /// Lower bound over network-confined controls.
    pub lower: f64,
    /// `upper` recomputed by quadrature along the limit path.
    pub upper_quadrature: f64,
    /// Tail bound of the quadrature.
    pub tail: f64,
    pub strict: bool,
}

/// `(λ√2(3 − √2) − 1 + e^(−λ√2)) / (λ²√2)`.
pub fn upper_closed_form(lambda: f64) -> f64 {
    (lambda * SQRT_2 * (3.0 - SQRT_2) - 1.0 + (-lambda * SQRT_2).exp()) / (lambda * lambda * SQRT_2)
}

/// `(2λ − 1 + e^(−λ)) / λ²`.
pub fn lower_closed_form(lambda: f64) -> f64 {
    (2.0 * lambda - 1.0 + (-lambda).exp()) / (lambda * lambda)
}

pub fn counterexample_costs(lambda: f64) -> Result<CounterexampleCosts> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("discount rate must be positive, got {lambda}")));
    }
    let theta = 5.0 * FRAC_PI_4;
    let start = NetworkPoint::new(Branch::N, 1.0)?;
    let path = constant_control_limit(start, theta)?;
    let control = ControlSchedule::direction(theta);
    // |x2| <= 1 along the path, so ℓ <= 2 + √2 + 1
    let bound = 3.0 + SQRT_2;
    let horizon = (bound / (lambda * 1e-13)).ln() / lambda;
    let prob = ValueProblem::new(lambda, CostField::Counterexample { bound })?;
    let est = cost_functional(
        &LimitPath {
            path: &path,
            control: &control,
            horizon,
        },
        &prob,
    );
    let (upper, lower) = (upper_closed_form(lambda), lower_closed_form(lambda));
    Ok(CounterexampleCosts {
        lambda,
        upper,
        lower,
        upper_quadrature: est.value,
        tail: est.tail,
        strict: upper < lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cost along the path split by hand: `(2 − √2)/λ` plus the `|x2|` term on `[0, √2]`.
    fn upper_by_pieces(l: f64) -> f64 {
        let e = (-l * SQRT_2).exp();
        (2.0 - SQRT_2) / l + (1.0 - e) / l - (1.0 - e * (1.0 + l * SQRT_2)) / (SQRT_2 * l * l)
    }

    /// `∫_0^1 e^(−λt)(2 − t) dt + e^(−λ)/λ`.
    fn lower_by_pieces(l: f64) -> f64 {
        let e = (-l).exp();
        2.0 * (1.0 - e) / l - (1.0 - e * (1.0 + l)) / (l * l) + e / l
    }

    #[test]
    fn unit_discount() {
        let c = counterexample_costs(1.0).unwrap();
        assert!((c.upper - upper_by_pieces(1.0)).abs() < 1e-14);
        assert!((c.lower - lower_by_pieces(1.0)).abs() < 1e-14);
        assert!((c.upper - 1.050_589_148).abs() < 1e-9);
        assert!((c.lower - 1.367_879_441).abs() < 1e-9);
        assert!((c.upper_quadrature - c.upper).abs() < 1e-9);
        assert!(c.strict);
    }

    #[test]
    fn discount_two() {
        let c = counterexample_costs(2.0).unwrap();
        assert!((c.upper - upper_by_pieces(2.0)).abs() < 1e-14);
        assert!((c.lower - lower_by_pieces(2.0)).abs() < 1e-14);
        assert!((c.upper - 0.626_565).abs() < 1e-6);
        assert!((c.lower - 0.783_834).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_discount() {
        assert!(counterexample_costs(0.0).is_err());
    }
}
