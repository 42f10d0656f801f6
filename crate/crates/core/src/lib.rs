//! Singularly perturbed optimal control toward the cross-shaped network `Γ`, the union of
//! the two coordinate axes.
//!
//! The penalty `d(x) = x1² x2²` vanishes exactly on `Γ`; the drift `−∇d/ε` pushes controlled
//! trajectories onto it as `ε → 0`. The crate integrates the penalized ODE, builds the limit
//! trajectories on the network, and solves the discounted value problems in the plane and on
//! the network.

// `!(x > 0.0)` is used on purpose so that NaN fails input checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod limits;
pub mod value;

pub use error::{Error, Result};
