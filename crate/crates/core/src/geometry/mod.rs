//! SE(3) algebra, pinhole projection and the analytic Jacobians used by
//! initialization and tracking. Everything here is a pure function of its
//! inputs.

mod camera;
mod euler;
mod jacobian;
mod pose;

pub use camera::{CameraModel, DEFAULT_Z_MIN};
pub use euler::{yaw_matrix, EulerAxis, EulerPose, GIMBAL_LIMIT};
pub use jacobian::{
    jacobian_point_euler, jacobian_point_se3, jacobian_point_translation, jacobian_projection,
    transform_point,
};
pub use pose::{skew, so3_exp, so3_log, Pose, Tangent};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point is behind the camera (depth {0:.3} m)")]
    BehindCamera(f64),
    #[error("pitch {0:.6} rad is at the Euler singularity")]
    GimbalLock(f64),
    #[error("rotation is not orthonormal (error {0:e})")]
    NotOrthonormal(f64),
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
}
