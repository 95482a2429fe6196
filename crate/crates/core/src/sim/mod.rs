//! Synthetic world, sensor and segmentation simulator. Everything is a
//! deterministic function of its spec and seed.

mod render;
mod sensors;
mod world;

pub use render::{render_masks, RenderParams};
pub use sensors::{
    simulate_sensors, simulate_sequence, Blanking, FrameBundle, FrameSensors, FrameSource, GpsFix, SensorNoiseSpec,
    SyntheticSequence,
};
pub use world::{generate_world, Centerline, RoadSegment, SignboardSpec, World, WorldSpec};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
    #[error("frame {frame}: {message}")]
    Frame { frame: usize, message: String },
}

use crate::geometry::CameraModel;

/// Forward-looking 640x360 camera used by the examples and tests.
pub fn front_camera() -> CameraModel {
    CameraModel::new(500.0, 500.0, 319.5, 179.5, 640, 360, CameraModel::vehicle_mount(1.5, 0.0, 1.5, 0.0, 0.03))
        .expect("valid camera")
}

/// Rear-facing twin of [`front_camera`].
pub fn rear_camera() -> CameraModel {
    CameraModel::new(
        500.0,
        500.0,
        319.5,
        179.5,
        640,
        360,
        CameraModel::vehicle_mount(-0.5, 0.0, 1.5, std::f64::consts::PI, 0.03),
    )
    .expect("valid camera")
}
