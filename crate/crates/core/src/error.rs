use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the flow, geometry and audit routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("curvature tuple {values:?} lies outside the cone {cone}")]
    CurvatureOutsideCone { values: Vec<f64>, cone: String },

    #[error("speed evaluated to {value} at {values:?}; speeds must be positive")]
    NonPositiveSpeed { values: Vec<f64>, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sampling plan produced no points inside the cone")]
    EmptySample,

    #[error("curvature left the admissible cone at vertex {vertex} (t = {t})")]
    ConeExit { vertex: usize, t: f64 },

    #[error("divergence of the sphere integral could not be decided: {reason}")]
    IndeterminateDivergence { reason: String },

    #[error("degenerate element: {0}")]
    DegenerateElement(String),

    #[error("invalid hypersurface: {0}")]
    InvalidSurface(String),

    #[error("reference point {point:?} is not strictly inside the hypersurface")]
    CenterOutside { point: [f64; 3] },

    #[error("non-convex input: curvature {value} at vertex {vertex}")]
    NonConvexInput { vertex: usize, value: f64 },

    #[error("mesh degeneracy: {0}")]
    MeshDegeneracy(String),

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("at least {needed} frames are required, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("the hypersurface never reaches the plane within the trajectory span")]
    NeverTouches,

    #[error("the hypersurface already meets the plane at the first frame (t = {t0})")]
    TouchesAtStart { t0: f64 },

    #[error("reflection is not strict at the start time t = {t}")]
    StartNotStrict { t: f64 },

    #[error("the trajectory has no frames")]
    EmptyTrajectory,

    #[error("audit precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("no frames remain after the touch time {tau} (trajectory ends at {t_end})")]
    NoFramesPastTouch { tau: f64, t_end: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("trajectory cannot produce a frame at t = {t}: {reason}")]
    FrameUnavailable { t: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error on {path:?}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
