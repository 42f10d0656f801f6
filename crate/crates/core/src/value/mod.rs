//! Discounted value functions: `V^ε` on a planar grid, `V_Γ` on the network, the limit value
//! `V̄`, and the convergence study tying them together.

pub mod bar;
pub mod convergence;
pub mod cost;
pub mod counterexample;
pub mod grid2d;
pub mod network;

pub use bar::{solve_value_bar, steer_and_stay_cost, BarMethod, BarValue};
pub use convergence::{convergence_study, ConvergenceOptions, ConvergenceReport, EpsRow, LipschitzFit, ProbeMargins};
pub use cost::{cost_functional, discounted_integral, CostEstimate, CostField, CostPath, LimitPath, Mode, ValueProblem};
pub use counterexample::{counterexample_costs, lower_closed_form, upper_closed_form, CounterexampleCosts};
pub use grid2d::{solve_value_eps, GridSpec, GridValueFunction, Region, SolveStats, Sweep};
pub use network::{solve_value_network, EdgeGridSpec, EdgeValueFunction};
