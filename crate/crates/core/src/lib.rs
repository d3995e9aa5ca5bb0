//! Closed-form quaternion extraction from rotation matrices and point-cloud
//! data via maximal adjugate rows of the profile matrix.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cloud;
pub mod error;
pub mod extract;
pub mod linalg;
pub mod matching;
pub mod pose;
pub mod rotations;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use extract::{
    extract_quat2_exact, extract_quat2_noisy, extract_quat3_exact, extract_quat3_noisy, Adjugate2, AdjugateMatrix4,
    ExtractionResult, SectorClass, SectorId,
};
pub use linalg::{max_eigenvalue_sym4, Mat2, Mat3, Mat4, Mat5, SymMat4};
pub use matching::{cross_covariance, match2d, match3d, Match2dResult, Match3dResult};
pub use pose::{
    pose2d, pose3d_ortho, pose3d_perspective, pose3d_perspective_refined, rotation_error, CameraConvention, CameraTag,
    PoseSolution,
};
pub use rotations::{AxisAngle, Quat2, Quaternion, Rotation2, Rotation3};
