//! Noisy odometry and GPS along a ground-truth trajectory, plus lazily
//! rendered per-camera masks.

use std::ops::Range;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::costmap::SegMask;
use crate::geometry::{CameraModel, Pose, Tangent};
use crate::hdmap::HdMap;

use super::{render_masks, RenderParams, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorNoiseSpec {
    /// Odometry translation noise, meters per meter traveled (x and y).
    pub odom_trans_sigma: f64,
    /// Odometry yaw noise, radians per meter traveled.
    pub odom_yaw_sigma: f64,
    /// Systematic odometry scale error (0.01 reads 1% long).
    pub odom_scale_bias: f64,
    /// Horizontal GPS noise per axis, meters.
    pub gps_sigma: f64,
    pub gps_dropout: f64,
    /// Probability of flipping each mask pixel.
    pub pixel_flip: f64,
}

impl Default for SensorNoiseSpec {
    fn default() -> Self {
        SensorNoiseSpec {
            odom_trans_sigma: 0.01,
            odom_yaw_sigma: 0.001,
            odom_scale_bias: 0.0,
            gps_sigma: 3.0,
            gps_dropout: 0.0,
            pixel_flip: 0.0,
        }
    }
}

impl SensorNoiseSpec {
    pub fn noiseless() -> Self {
        SensorNoiseSpec { odom_trans_sigma: 0.0, odom_yaw_sigma: 0.0, gps_sigma: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let sigmas = [self.odom_trans_sigma, self.odom_yaw_sigma, self.gps_sigma];
        if sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(SimError::InvalidSpec("noise sigmas must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.gps_dropout) || !(0.0..=1.0).contains(&self.pixel_flip) {
            return Err(SimError::InvalidSpec("probabilities must lie in [0, 1]".into()));
        }
        if !self.odom_scale_bias.is_finite() || self.odom_scale_bias <= -1.0 {
            return Err(SimError::InvalidSpec("odometry scale bias must exceed -1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpsFix {
    pub position: Vector2<f64>,
    pub valid: bool,
}

/// Everything but the images for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSensors {
    pub timestamp: f64,
    /// Body-frame motion from the previous frame to this one (identity for
    /// the first frame).
    pub odometry: Pose,
    pub gps: GpsFix,
    pub ground_truth: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBundle {
    pub sensors: FrameSensors,
    /// One mask per class for each camera, indexed by `LandmarkClass::index`.
    pub masks: Vec<[SegMask; 3]>,
}

/// Random-access frame provider consumed by the localization pipeline.
pub trait FrameSource {
    fn map(&self) -> &HdMap;
    fn cameras(&self) -> &[CameraModel];
    fn sensors(&self) -> &[FrameSensors];
    fn masks(&self, frame: usize) -> Result<Vec<[SegMask; 3]>, SimError>;

    fn len(&self) -> usize {
        self.sensors().len()
    }

    fn is_empty(&self) -> bool {
        self.sensors().is_empty()
    }

    fn frame(&self, frame: usize) -> Result<FrameBundle, SimError> {
        Ok(FrameBundle { sensors: self.sensors()[frame].clone(), masks: self.masks(frame)? })
    }
}

/// Samples odometry increments and GPS fixes. Every frame consumes the same
/// number of draws whatever the noise levels, so changing one sigma does not
/// reshuffle the others.
pub fn simulate_sensors(trajectory: &[Pose], timestamps: &[f64], noise: &SensorNoiseSpec, seed: u64) -> Vec<FrameSensors> {
    assert_eq!(trajectory.len(), timestamps.len(), "one timestamp per pose");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trajectory.len());
    for (k, gt) in trajectory.iter().enumerate() {
        let n: [f64; 5] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let drop: f64 = rng.random();
        let odometry = if k == 0 {
            Pose::identity()
        } else {
            let rel = trajectory[k - 1].inverse().compose(gt);
            let d = rel.translation.norm();
            let err = Tangent::new(
                Vector3::new(
                    noise.odom_scale_bias * d + noise.odom_trans_sigma * d * n[0],
                    noise.odom_trans_sigma * d * n[1],
                    0.0,
                ),
                Vector3::new(0.0, 0.0, noise.odom_yaw_sigma * d * n[2]),
            );
            if err.norm() == 0.0 {
                rel
            } else {
                rel.retract(&err)
            }
        };
        let gps = GpsFix {
            position: gt.translation.xy() + Vector2::new(n[3], n[4]) * noise.gps_sigma,
            valid: drop >= noise.gps_dropout,
        };
        out.push(FrameSensors { timestamp: timestamps[k], odometry, gps, ground_truth: *gt });
    }
    out
}

/// Frames in which masks are wiped, on one camera or on all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct Blanking {
    pub frames: Range<usize>,
    pub camera: Option<usize>,
}

/// Simulated sequence whose masks are rendered on demand.
#[derive(Clone, Debug)]
pub struct SyntheticSequence {
    pub map: HdMap,
    pub cameras: Vec<CameraModel>,
    pub frames: Vec<FrameSensors>,
    pub render: RenderParams,
    pub pixel_flip: f64,
    pub seed: u64,
    pub blanking: Vec<Blanking>,
}

pub fn simulate_sequence(
    map: HdMap,
    trajectory: &[Pose],
    timestamps: &[f64],
    cameras: Vec<CameraModel>,
    noise: &SensorNoiseSpec,
    seed: u64,
) -> Result<SyntheticSequence, SimError> {
    noise.validate()?;
    Ok(SyntheticSequence {
        frames: simulate_sensors(trajectory, timestamps, noise, seed),
        map,
        cameras,
        render: RenderParams::default(),
        pixel_flip: noise.pixel_flip,
        seed,
        blanking: Vec::new(),
    })
}

impl SyntheticSequence {
    pub fn blank(&mut self, frames: Range<usize>, camera: Option<usize>) {
        self.blanking.push(Blanking { frames, camera });
    }

    fn is_blanked(&self, frame: usize, camera: usize) -> bool {
        self.blanking.iter().any(|b| b.frames.contains(&frame) && b.camera.is_none_or(|c| c == camera))
    }

    /// Flips pixels independently with probability `pixel_flip`, skipping
    /// ahead geometrically instead of drawing once per pixel.
    fn flip_pixels(&self, masks: &mut [SegMask; 3], frame: usize, camera: usize) {
        let p = self.pixel_flip;
        if p <= 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6d61_736b);
        rng.set_stream((frame * self.cameras.len() + camera) as u64);
        let n = masks[0].data.len();
        let total = 3 * n;
        let mut i = 0usize;
        loop {
            let skip = if p >= 1.0 {
                0
            } else {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                (u.ln() / (1.0 - p).ln()).floor() as usize
            };
            i = i.saturating_add(skip);
            if i >= total {
                break;
            }
            let v = &mut masks[i / n].data[i % n];
            *v ^= 1;
            i += 1;
        }
    }
}

impl FrameSource for SyntheticSequence {
    fn map(&self) -> &HdMap {
        &self.map
    }

    fn cameras(&self) -> &[CameraModel] {
        &self.cameras
    }

    fn sensors(&self) -> &[FrameSensors] {
        &self.frames
    }

    fn masks(&self, frame: usize) -> Result<Vec<[SegMask; 3]>, SimError> {
        let gt = &self
            .frames
            .get(frame)
            .ok_or_else(|| SimError::Frame { frame, message: "out of range".into() })?
            .ground_truth;
        Ok(self
            .cameras
            .iter()
            .enumerate()
            .map(|(ci, cam)| {
                let mut masks = render_masks(&self.map, cam, gt, &self.render);
                if self.is_blanked(frame, ci) {
                    masks.iter_mut().for_each(SegMask::clear);
                } else {
                    self.flip_pixels(&mut masks, frame, ci);
                }
                masks
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_world, WorldSpec};

    fn straight_line(n: usize) -> (Vec<Pose>, Vec<f64>) {
        let traj = (0..n).map(|k| Pose::from_xyz_yaw(2.2 * k as f64, 0.0, 0.0, 0.0)).collect();
        let ts = (0..n).map(|k| k as f64 * 0.1).collect();
        (traj, ts)
    }

    #[test]
    fn zero_noise_odometry_reproduces_trajectory() {
        let w = generate_world(&WorldSpec::highway(300)).unwrap();
        let frames = simulate_sensors(&w.trajectory, &w.timestamps, &SensorNoiseSpec::noiseless(), 3);
        let mut pose = w.trajectory[0];
        for (k, f) in frames.iter().enumerate() {
            pose = pose.compose(&f.odometry);
            assert!((pose.translation - w.trajectory[k].translation).norm() < 1e-9);
            assert!(pose.inverse().compose(&w.trajectory[k]).angle() < 1e-12);
            assert_eq!(f.gps.position, w.trajectory[k].translation.xy());
        }
    }

    #[test]
    fn gps_noise_has_requested_spread() {
        let (traj, ts) = straight_line(10_000);
        let noise = SensorNoiseSpec { gps_sigma: 3.0, ..SensorNoiseSpec::noiseless() };
        let frames = simulate_sensors(&traj, &ts, &noise, 11);
        for axis in 0..2 {
            let errs: Vec<f64> = frames.iter().map(|f| (f.gps.position - f.ground_truth.translation.xy())[axis]).collect();
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (errs.len() - 1) as f64;
            assert!((2.8..=3.2).contains(&var.sqrt()), "std {}", var.sqrt());
        }
    }

    #[test]
    fn full_dropout_invalidates_every_fix() {
        let (traj, ts) = straight_line(500);
        let noise = SensorNoiseSpec { gps_dropout: 1.0, ..Default::default() };
        assert!(simulate_sensors(&traj, &ts, &noise, 1).iter().all(|f| !f.gps.valid));
        let noise = SensorNoiseSpec { gps_dropout: 0.0, ..Default::default() };
        assert!(simulate_sensors(&traj, &ts, &noise, 1).iter().all(|f| f.gps.valid));
    }

    #[test]
    fn sensors_are_seed_deterministic() {
        let (traj, ts) = straight_line(50);
        let noise = SensorNoiseSpec::default();
        assert_eq!(simulate_sensors(&traj, &ts, &noise, 5), simulate_sensors(&traj, &ts, &noise, 5));
        assert_ne!(simulate_sensors(&traj, &ts, &noise, 5), simulate_sensors(&traj, &ts, &noise, 6));
    }

    #[test]
    fn blanking_and_flips() {
        let w = generate_world(&WorldSpec::highway(20)).unwrap();
        let cam = CameraModel::new(300.0, 300.0, 160.0, 90.0, 320, 180, CameraModel::vehicle_mount(1.5, 0.0, 1.5, 0.0, 0.02))
            .unwrap();
        let mut seq = simulate_sequence(w.map, &w.trajectory, &w.timestamps, vec![cam], &SensorNoiseSpec::noiseless(), 2)
            .unwrap();
        let clean = seq.masks(4).unwrap();
        assert!(!clean[0][0].is_empty());
        seq.blank(3..5, Some(0));
        assert!(seq.masks(4).unwrap()[0].iter().all(SegMask::is_empty));
        assert_eq!(seq.masks(5).unwrap(), clean_at(&seq, 5));
        seq.pixel_flip = 0.01;
        let noisy = seq.masks(6).unwrap();
        let flips: usize = (0..3)
            .map(|c| noisy[0][c].data.iter().zip(&clean_at(&seq, 6)[0][c].data).filter(|(a, b)| a != b).count())
            .sum();
        let expected = 0.01 * 3.0 * 320.0 * 180.0;
        assert!((flips as f64 - expected).abs() < 0.15 * expected, "{flips}");
        assert_eq!(noisy, seq.masks(6).unwrap());
    }

    fn clean_at(seq: &SyntheticSequence, frame: usize) -> Vec<[SegMask; 3]> {
        let gt = seq.frames[frame].ground_truth;
        seq.cameras.iter().map(|c| render_masks(&seq.map, c, &gt, &seq.render)).collect()
    }
}
