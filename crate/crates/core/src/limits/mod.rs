//! The `ε → 0` layer: projection by gradient flow, closed-form limit paths, Zeno controls,
//! tracking on the network and control surgery.

pub mod gradient_flow;
pub mod junction;
pub mod surgery;
pub mod tracking;
pub mod trajectory;
pub mod zeno;

pub use gradient_flow::{gradient_flow, gradient_flow_with, FlowOptions, GradientFlowResult};
pub use junction::{
    constant_control_limit, drive_on_network, edge_limit_dynamics, equilibrium_point, eta_lower_bound,
    first_crossing, is_bisector, junction_exit, penalized_field, EdgeRun, ANGLE_TOL,
};
pub use surgery::{concat, restricted_control, steer_on_network, RestrictedControl, RestrictedOptions};
pub use tracking::{tracking_trajectory, TrackingReport};
pub use trajectory::{LimitTrajectory, Segment, SegmentState};
pub use zeno::{zeno_branch, zeno_control};
