//! Value of the limit problem: `V̄(x) = V_Γ(φ_d(x))`, with a direct search over network
//! controls as a cross-check.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{project_to_network, Branch, NetworkPoint, PlanePoint};
use crate::limits::{drive_on_network, steer_on_network};

use super::cost::{cost_functional, LimitPath, ValueProblem};
use super::network::EdgeValueFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarMethod {
    /// Network value at the projection.
    Projection,
    /// Projection plus a search over go-to-a-point-then-stay network controls.
    CrossCheck { targets_per_unit: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct BarValue {
    pub x: PlanePoint,
    pub xbar: NetworkPoint,
    pub value: f64,
    /// Best cost found by the direct search, when requested.
    pub search_value: Option<f64>,
    /// Network point where the best searched path stops.
    pub search_target: Option<NetworkPoint>,
}

impl BarValue {
    /// `|search − value|`, zero without a search.
    pub fn disagreement(&self) -> f64 {
        self.search_value.map_or(0.0, |s| (s - self.value).abs())
    }
}

/// Discounted cost of steering `xbar` to `y` at unit speed and staying there.
pub fn steer_and_stay_cost(prob: &ValueProblem, xbar: NetworkPoint, y: NetworkPoint) -> f64 {
    let (control, tau) = steer_on_network(xbar, y);
    let path = drive_on_network(xbar, &control, tau + 1.0);
    let run = cost_functional(
        &LimitPath {
            path: &path,
            control: &control,
            horizon: tau,
        },
        prob,
    );
    run.value + (-prob.lambda * tau).exp() * prob.cost.eval_state(y.to_plane()) / prob.lambda
}

/// `V̄(x)` from a solved network value function.
pub fn solve_value_bar(prob: &ValueProblem, x: PlanePoint, net: &EdgeValueFunction, method: BarMethod) -> Result<BarValue> {
    prob.require_eikonal()?;
    let xbar = project_to_network(x);
    let value = net.eval(xbar);
    let (search_value, search_target) = match method {
        BarMethod::Projection => (None, None),
        BarMethod::CrossCheck { targets_per_unit } => {
            let radius = net.h * net.n as f64;
            let m = ((radius * targets_per_unit as f64).ceil() as usize).max(1);
            let mut best = (steer_and_stay_cost(prob, xbar, NetworkPoint::JUNCTION), NetworkPoint::JUNCTION);
            for b in Branch::EDGES {
                for i in 1..=m {
                    let y = NetworkPoint::new(b, radius * i as f64 / m as f64)?;
                    let c = steer_and_stay_cost(prob, xbar, y);
                    if c < best.0 {
                        best = (c, y);
                    }
                }
            }
            (Some(best.0), Some(best.1))
        }
    };
    Ok(BarValue {
        x,
        xbar,
        value,
        search_value,
        search_target,
    })
}
