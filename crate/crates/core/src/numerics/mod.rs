//! Small dense linear algebra, uniform time grids, fixed-step RK4 and
//! trapezoidal quadrature.
//!
//! Every ODE in the crate runs on a [`TimeGrid`] shared by state, adjoint,
//! observation and quadrature, so no dense output machinery is needed:
//! off-node values come from [`GridTrajectory::eval_at`] (piecewise linear).

mod grid;
mod linalg;
mod ode;

pub use grid::{trapezoid, trapezoid_weight, GridTrajectory, TimeGrid, SLACK};
pub use linalg::{axpy, dot, norm, norm_sq, solve_dense, sub, Lu, Mat, PIVOT_THRESHOLD};
pub use ode::{integrate, integrate_projected, Direction};

/// `true` when every entry is neither NaN nor infinite.
pub fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}
