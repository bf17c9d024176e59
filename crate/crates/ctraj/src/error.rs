//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Rotation angle at or beyond the principal branch of the logarithm.
    #[error("rotation angle {angle} rad is too close to pi, Log branch is ambiguous")]
    LogBranchAmbiguity { angle: f64 },

    /// Knot timestamps must be strictly increasing.
    #[error("knots must be strictly increasing, violated at index {index}")]
    NonMonotonicKnots { index: usize },

    /// Spline degree outside the supported range.
    #[error("spline degree {degree} is not supported (need degree >= 2)")]
    InvalidDegree { degree: usize },

    /// Knot and control-point counts differ.
    #[error("knot count {knots} does not match control point count {control_points}")]
    KnotCountMismatch { knots: usize, control_points: usize },

    /// Not enough knots around a span to build its basis matrix.
    #[error("span {span} lacks surrounding knots for a degree-{degree} basis")]
    InsufficientKnots { span: usize, degree: usize },

    /// Evaluation time outside the half-open interpolation domain.
    #[error("time {t} outside valid interpolation range [{start}, {end})")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    /// Frame timestamps must advance monotonically.
    #[error("frame timestamp {t} does not advance past {last}")]
    NonMonotonicTimestamp { t: f64, last: f64 },

    /// Point cloud too small or rank-deficient for initialization.
    #[error("degenerate point cloud ({n_points} points) cannot define an object frame")]
    DegeneratePointCloud { n_points: usize },

    /// The normal equations could not be solved even with damping.
    #[error("normal equations singular ({dimension} variables, damping up to {max_lambda:.1e})")]
    SingularNormalEquations { dimension: usize, max_lambda: f64 },

    /// Observation covariance is not symmetric positive definite.
    #[error("observation covariance for point {point_id} is not positive definite")]
    InvalidCovariance { point_id: u64 },

    /// An observation references an unknown object point.
    #[error("observation references unknown object point {point_id}")]
    UnknownObjectPoint { point_id: u64 },

    /// Observations in one frame must share timestamp and camera pose.
    #[error("inconsistent frame: {reason}")]
    InconsistentFrame { reason: String },

    /// Too few frames for the requested operation.
    #[error("need at least {need} frames, have {have}")]
    InsufficientFrames { have: usize, need: usize },

    /// The window has nothing to optimize.
    #[error("no free variables in the window (all control points fixed)")]
    NoFreeVariables,

    /// Paired trajectory lists must match in length and timestamps.
    #[error("trajectory length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// No camera pose available at a requested timestamp.
    #[error("no camera pose at timestamp {t}")]
    MissingCameraPose { t: f64 },

    /// Empty parameter grid or sample set.
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },

    /// Benchmarks refuse to time methods that disagree with the oracle.
    #[error("benchmark correctness gate failed for {what}: deviation {deviation:.3e}")]
    CorrectnessGate { what: String, deviation: f64 },
}
