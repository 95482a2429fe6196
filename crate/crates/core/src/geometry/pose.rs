//! Rigid transforms in SE(3) with the exponential/logarithm maps used by
//! the optimizers.
//!
//! Tangent vectors are ordered translation first, rotation second, and a
//! perturbation always acts on the right: `T * Exp(delta)`.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix6, Quaternion, Rotation3, UnitQuaternion, Vector3, Vector6};

use super::GeometryError;

const SMALL_ANGLE: f64 = 1e-6;

/// Skew-symmetric matrix such that `skew(a) * b == a.cross(b)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Element of the tangent space se(3): `(rho, phi)` with `rho` in meters
/// and `phi` an axis-angle vector in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent(pub Vector6<f64>);

impl Tangent {
    pub fn new(translation: Vector3<f64>, rotation: Vector3<f64>) -> Self {
        Tangent(Vector6::new(
            translation.x,
            translation.y,
            translation.z,
            rotation.x,
            rotation.y,
            rotation.z,
        ))
    }

    pub fn zero() -> Self {
        Tangent(Vector6::zeros())
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn rotation(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// SO(3) exponential (Rodrigues).
pub fn so3_exp(phi: &Vector3<f64>) -> Rotation3<f64> {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let (a, b) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rotation3::from_matrix_unchecked(Matrix3::identity() + k * a + k * k * b)
}

/// SO(3) logarithm, accurate near zero and stable up to (and at) pi.
pub fn so3_log(rot: &Rotation3<f64>) -> Vector3<f64> {
    let m = rot.matrix();
    let v = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5;
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = v.norm();
    let theta = sin.atan2(cos);
    if theta < SMALL_ANGLE {
        return v * (1.0 + theta * theta / 6.0);
    }
    if cos > -0.99 {
        return v * (theta / sin);
    }
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part and take its sign from `v`.
    let sym = (m + m.transpose()) * 0.5 - Matrix3::identity() * cos;
    let diag = Vector3::new(sym[(0, 0)], sym[(1, 1)], sym[(2, 2)]);
    let i = diag.imax();
    let mut axis: Vector3<f64> = sym.column(i).into_owned();
    axis /= axis.norm();
    if axis.dot(&v) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Left Jacobian `V(phi)` of SO(3), mapping `rho` to the SE(3) translation.
fn so3_left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let (b, c) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        let theta = theta2.sqrt();
        (
            (1.0 - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    Matrix3::identity() + k * b + k * k * c
}

fn so3_left_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let c = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        let theta = theta2.sqrt();
        (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / theta2
    };
    Matrix3::identity() - k * 0.5 + k * k * c
}

/// Rigid transform. `Pose` values read as "frame A in frame B" in the
/// naming of the call sites (`pose_wb`: vehicle in world).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (r, p, y) = self.rotation.euler_angles();
        write!(
            f,
            "Pose(t=[{:.4}, {:.4}, {:.4}], rpy=[{:.4}, {:.4}, {:.4}] deg)",
            self.translation.x,
            self.translation.y,
            self.translation.z,
            r.to_degrees(),
            p.to_degrees(),
            y.to_degrees()
        )
    }
}

impl Pose {
    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Pose { rotation, translation }
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Pose {
            rotation: Rotation3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    /// Planar pose: position `(x, y, z)` with heading `yaw` about +z.
    pub fn from_xyz_yaw(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Pose {
            rotation: Rotation3::from_axis_angle(&Vector3::z_axis(), yaw),
            translation: Vector3::new(x, y, z),
        }
    }

    /// Builds a pose from a raw matrix after checking orthonormality.
    pub fn try_from_matrix(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let err = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
        if err > 1e-9 || rotation.determinant() < 0.0 {
            return Err(GeometryError::NotOrthonormal(err));
        }
        Ok(Pose {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            translation,
        })
    }

    /// Translation plus unit quaternion `(qx, qy, qz, qw)`.
    pub fn from_translation_quaternion(t: Vector3<f64>, q: [f64; 4]) -> Self {
        let uq = UnitQuaternion::from_quaternion(Quaternion::new(q[3], q[0], q[1], q[2]));
        Pose {
            rotation: uq.to_rotation_matrix(),
            translation: t,
        }
    }

    /// Quaternion as `(qx, qy, qz, qw)` with `qw >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&self.rotation);
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.i, s * q.j, s * q.k, s * q.w]
    }

    pub fn rotation_matrix(&self) -> &Matrix3<f64> {
        self.rotation.matrix()
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r_inv = self.rotation.inverse();
        Pose {
            rotation: r_inv,
            translation: -(r_inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self^{-1} * p` without forming the inverse.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p - self.translation)
    }

    pub fn exp(v: &Tangent) -> Pose {
        let phi = v.rotation();
        Pose {
            rotation: so3_exp(&phi),
            translation: so3_left_jacobian(&phi) * v.translation(),
        }
    }

    pub fn log(&self) -> Tangent {
        let phi = so3_log(&self.rotation);
        Tangent::new(so3_left_jacobian_inv(&phi) * self.translation, phi)
    }

    /// `self * Exp(delta)`.
    pub fn retract(&self, delta: &Tangent) -> Pose {
        self.compose(&Pose::exp(delta))
    }

    /// Adjoint in translation-first ordering: `[[R, [t]x R], [0, R]]`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = *self.rotation.matrix();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&(skew(&self.translation) * r));
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        so3_log(&self.rotation).norm()
    }

    pub fn yaw(&self) -> f64 {
        let m = self.rotation.matrix();
        m[(1, 0)].atan2(m[(0, 0)])
    }

    /// Re-orthonormalizes the rotation; long odometry chains call this to
    /// bound round-off.
    pub fn renormalized(&self) -> Pose {
        let q = UnitQuaternion::from_rotation_matrix(&self.rotation);
        Pose {
            rotation: q.to_rotation_matrix(),
            translation: self.translation,
        }
    }

    pub fn orthonormality_error(&self) -> f64 {
        let m = self.rotation.matrix();
        (m * m.transpose() - Matrix3::identity()).abs().max()
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Pose> for &'a Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}
