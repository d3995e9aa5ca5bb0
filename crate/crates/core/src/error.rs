use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Neither the analytic quartic nor the Jacobi sweep met the residual bound.
    #[error("eigenvalue solver did not converge (residual {residual:e}, tolerance {tolerance:e})")]
    NonConvergence { residual: f64, tolerance: f64 },
    /// The adjugate vanished, usually because the largest eigenvalue is repeated.
    #[error("adjugate matrix is degenerate (trace {trace:e})")]
    DegenerateAdjugate { trace: f64 },
    #[error("quaternion is not unit length (|q|^2 = {norm_sq})")]
    NotUnit { norm_sq: f64 },
    #[error("rotation axis is not unit length (|n| = {norm})")]
    AxisNotUnit { norm: f64 },
    #[error("(c, s) is not on the unit circle (c^2 + s^2 = {radius_sq})")]
    NotOnCircle { radius_sq: f64 },
    /// A measured 2D matrix with no rotational part.
    #[error("input has no rotational content")]
    DegenerateInput,
    #[error("matrix is not a proper rotation (orthonormality error {error:e})")]
    NotRotation { error: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("point cloud shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Matching data admits no preferred rotation.
    #[error("data is rotationally ambiguous")]
    DegenerateData,
    /// Reference cloud spans too few dimensions (d1 ~ 0).
    #[error("reference cloud is degenerate (d1 = {d1:e})")]
    DegenerateReference { d1: f64 },
    #[error("pose is ambiguous (d2 and d3 both vanish)")]
    AmbiguousPose,
    #[error("camera lies inside or too close to the cloud")]
    CameraInsideCloud,
    #[error("no stationary point of the loss in [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },
    #[error("projected depths are degenerate")]
    DepthDegenerate,
}

pub type Result<T> = std::result::Result<T, Error>;
