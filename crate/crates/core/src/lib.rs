//! Flatness-based trajectory optimization for fixed-wing UAVs.
//!
//! The position of a 3-DOF fixed-wing vehicle is a flat output: speed,
//! heading, flight-path angle and the three load factors are algebraic
//! functions of position and its first two derivatives. This crate
//! parameterizes position as a uniform-time piecewise quintic spline that is
//! fully determined by its interior waypoints and total duration, turns every
//! state, control and obstacle constraint into an integral penalty, and
//! minimizes the result with L-BFGS using analytical gradients.
//!
//! ## Modules
//!
//! - [`flat`]: state/control <-> flat-output mappings
//! - [`spline`]: quintic spline representation and its banded boundary system
//! - [`banded`]: banded LU factorization used by the spline system
//! - [`costs`]: scenario description, penalty integrands and quadrature
//! - [`gradients`]: analytical gradient of the objective
//! - [`lbfgs`]: limited-memory quasi-Newton minimizer
//! - [`init`]: problem normalization, Dubins initial guess, segment count
//! - [`dubins`]: planar Dubins paths with a linear altitude profile
//! - [`precond`]: banded curvature preconditioner for L-BFGS
//! - [`detour`]: restarts that route waypoints around a blocking cluster
//! - [`solver`]: the full optimization loop and feasibility checks

// negated comparisons reject NaN on purpose; index loops mirror the math
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod costs;
pub mod detour;
pub mod dubins;
pub mod error;
pub mod flat;
pub mod gradients;
pub mod init;
pub mod lbfgs;
pub mod precond;
pub mod solver;
pub mod spline;

pub use costs::{
    Bounds, CostBreakdown, Margins, Obstacle, Scenario, SegmentCount, SolverConfig, TimeMode,
    Weights,
};
pub use error::{Error, Result};
pub use flat::{FlatPoint, LoadControls, UavState};
pub use init::Scaling;
pub use solver::{solve, Residuals, Solution, SolveReport, Termination};
pub use spline::FlatTrajectory;

/// 3-vector of `f64`.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 2-vector of `f64`.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Standard gravity [m/s^2].
pub const GRAVITY: f64 = 9.81;

/// Unit vector pointing down in the north-east-down frame.
pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}
