use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose};

/// Pitch magnitude beyond which Z-Y-X Euler angles are rejected.
pub const GIMBAL_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EulerAxis {
    X,
    Y,
    Z,
}

/// Pose with rotation written as `Rz(yaw) * Ry(pitch) * Rx(roll)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EulerPose {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

fn rx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn ry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn drx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn dry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn drz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Rotation about +z; exposed for the heading frame used by the tracker.
pub fn yaw_matrix(yaw: f64) -> Matrix3<f64> {
    rz(yaw)
}

impl EulerPose {
    pub fn new(roll: f64, pitch: f64, yaw: f64, x: f64, y: f64, z: f64) -> Self {
        EulerPose { roll, pitch, yaw, x, y, z }
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn set_translation(&mut self, t: &Vector3<f64>) {
        self.x = t.x;
        self.y = t.y;
        self.z = t.z;
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rz(self.yaw) * ry(self.pitch) * rx(self.roll)
    }

    /// `dR/d(angle)` for the named axis.
    pub fn rotation_derivative(&self, axis: EulerAxis) -> Matrix3<f64> {
        match axis {
            EulerAxis::X => rz(self.yaw) * ry(self.pitch) * drx(self.roll),
            EulerAxis::Y => rz(self.yaw) * dry(self.pitch) * rx(self.roll),
            EulerAxis::Z => drz(self.yaw) * ry(self.pitch) * rx(self.roll),
        }
    }

    pub fn check_gimbal(&self) -> Result<(), GeometryError> {
        if self.pitch.abs() >= GIMBAL_LIMIT {
            Err(GeometryError::GimbalLock(self.pitch))
        } else {
            Ok(())
        }
    }

    pub fn to_pose(&self) -> Pose {
        Pose::new(
            Rotation3::from_matrix_unchecked(self.rotation_matrix()),
            self.translation(),
        )
    }

    pub fn from_pose(pose: &Pose) -> Self {
        let m = pose.rotation.matrix();
        let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
        let roll = m[(2, 1)].atan2(m[(2, 2)]);
        let yaw = m[(1, 0)].atan2(m[(0, 0)]);
        let t = pose.translation;
        EulerPose { roll, pitch, yaw, x: t.x, y: t.y, z: t.z }
    }

    /// Maps Euler-angle rates `(roll, pitch, yaw)` to the body-frame
    /// angular velocity `w` satisfying `R^T dR = [w]x`. This is the bridge
    /// between Euler Jacobians and right-perturbation Jacobians.
    pub fn rates_to_body(&self) -> Matrix3<f64> {
        let (sr, cr) = self.roll.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        Matrix3::new(1.0, 0.0, -sp, 0.0, cr, sr * cp, 0.0, -sr, cr * cp)
    }
}
