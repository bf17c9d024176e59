//! Continuous-time rigid-body trajectory estimation on SE(3).
//!
//! Object trajectories are represented as cumulative B-splines over SE(3)
//! control points. The crate provides:
//!
//! - [`lie`]: SE(3)/SO(3) primitives (Exp/Log, Adjoint, left Jacobian,
//!   generators, body kinematics),
//! - [`spline`]: cumulative B-spline curves with non-uniform knots, pose
//!   interpolation and body velocity/acceleration evaluation,
//! - [`jacobians`]: closed-form derivatives of interpolated poses, body
//!   velocities and observation errors with respect to the control points,
//!   plus a central-difference oracle,
//! - [`solver`]: a robustified Gauss-Newton sliding-window estimator that
//!   fits control points (and optionally object points) to timestamped 3D
//!   point observations,
//! - [`synthetic`]: ground-truth motion generators, observation simulation,
//!   discrete-time velocity baselines and trajectory-error metrics,
//! - [`mod@bench`]: a timing harness comparing analytic and numeric Jacobian
//!   evaluation.

// negated float comparisons reject NaN where `<=` would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod jacobians;
pub mod lie;
pub mod solver;
pub mod spline;
pub mod synthetic;

pub use error::{Error, Result};
pub use lie::{Pose, Twist};
pub use spline::{KnotVector, SplineTrajectory};
