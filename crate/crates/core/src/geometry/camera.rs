use nalgebra::{Vector2, Vector3};

use super::{GeometryError, Pose};

/// Default minimum depth for a point to be considered in front of a camera.
pub const DEFAULT_Z_MIN: f64 = 0.1;

/// Pinhole camera rigidly mounted on the vehicle.
///
/// The camera frame is x right, y down, z along the optical axis;
/// `extrinsic_bc` places that frame in the vehicle (FLU) frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub extrinsic_bc: Pose,
    pub z_min: f64,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        extrinsic_bc: Pose,
    ) -> Result<Self, GeometryError> {
        let cam = CameraModel { fx, fy, cx, cy, width, height, extrinsic_bc, z_min: DEFAULT_Z_MIN };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64
            && self.z_min > 0.0;
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidCamera(format!(
                "fx={} fy={} cx={} cy={} size={}x{} z_min={}",
                self.fx, self.fy, self.cx, self.cy, self.width, self.height, self.z_min
            )))
        }
    }

    /// Camera looking along the vehicle's +x axis from `(x, y, z)` in the
    /// vehicle frame, rotated about the vehicle z axis by `yaw` (pi gives a
    /// rear camera) and tilted down by `pitch_down`.
    pub fn vehicle_mount(x: f64, y: f64, z: f64, yaw: f64, pitch_down: f64) -> Pose {
        use nalgebra::{Matrix3, Rotation3};
        // Columns: camera x, y, z axes expressed in the vehicle frame.
        let base = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
        let tilt = Rotation3::from_axis_angle(&Vector3::y_axis(), pitch_down);
        let turn = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
        let r = turn.matrix() * tilt.matrix() * base;
        Pose::new(Rotation3::from_matrix_unchecked(r), Vector3::new(x, y, z))
    }

    /// Camera-in-vehicle inverse, `T_cb`.
    pub fn extrinsic_cb(&self) -> Pose {
        self.extrinsic_bc.inverse()
    }

    pub fn project(&self, p_c: &Vector3<f64>) -> Result<Vector2<f64>, GeometryError> {
        if p_c.z <= self.z_min {
            return Err(GeometryError::BehindCamera(p_c.z));
        }
        Ok(Vector2::new(
            self.fx * p_c.x / p_c.z + self.cx,
            self.fy * p_c.y / p_c.z + self.cy,
        ))
    }

    /// True when `u` lies in the sampleable pixel domain
    /// `[0, width-1] x [0, height-1]`.
    pub fn contains(&self, u: &Vector2<f64>) -> bool {
        u.x >= 0.0
            && u.y >= 0.0
            && u.x <= (self.width - 1) as f64
            && u.y <= (self.height - 1) as f64
    }

    /// Horizontal field of view in radians.
    pub fn horizontal_fov(&self) -> f64 {
        let w = self.width as f64;
        (self.cx / self.fx).atan() + ((w - 1.0 - self.cx) / self.fx).atan()
    }
}
