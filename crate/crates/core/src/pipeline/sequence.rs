//! On-disk sequences.
//!
//! ```text
//! <dir>/map.txt        vector map
//! <dir>/cameras.toml   intrinsics and camera-in-vehicle poses
//! <dir>/log.txt        frame t | odometry x y z roll pitch yaw | gps x y valid | truth tx ty tz qx qy qz qw
//! <dir>/masks/<frame>_c<camera>_<class>.pbm
//! ```
//!
//! Masks are 1-bit PBM (`P4`) images.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::costmap::SegMask;
use crate::geometry::{CameraModel, EulerPose, Pose};
use crate::hdmap::{load_map, save_map, HdMap, LandmarkClass};
use crate::sim::{FrameSensors, FrameSource, GpsFix, SimError};

use super::PipelineError;

#[derive(Serialize, Deserialize)]
struct CameraEntry {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    z_min: f64,
    translation: [f64; 3],
    /// `qx qy qz qw`.
    quaternion: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct CameraFile {
    cameras: Vec<CameraEntry>,
}

fn mask_path(dir: &Path, frame: usize, camera: usize, class: LandmarkClass) -> PathBuf {
    dir.join("masks").join(format!("{frame:05}_c{camera}_{class}.pbm"))
}

/// Writes every frame of `source` below `dir`.
pub fn write_sequence(source: &dyn FrameSource, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir.join("masks"))?;
    save_map(source.map(), dir.join("map.txt")).map_err(|e| PipelineError::Sequence(e.to_string()))?;
    let cameras = CameraFile {
        cameras: source
            .cameras()
            .iter()
            .map(|c| {
                let t = c.extrinsic_bc.translation;
                CameraEntry {
                    fx: c.fx,
                    fy: c.fy,
                    cx: c.cx,
                    cy: c.cy,
                    width: c.width,
                    height: c.height,
                    z_min: c.z_min,
                    translation: [t.x, t.y, t.z],
                    quaternion: c.extrinsic_bc.quaternion(),
                }
            })
            .collect(),
    };
    fs::write(dir.join("cameras.toml"), toml::to_string(&cameras).expect("cameras serialize"))?;

    let mut log = String::from("# frame t odom_x odom_y odom_z odom_roll odom_pitch odom_yaw gps_x gps_y gps_valid tx ty tz qx qy qz qw\n");
    for (k, s) in source.sensors().iter().enumerate() {
        let o = EulerPose::from_pose(&s.odometry);
        let g = &s.ground_truth;
        let q = g.quaternion();
        writeln!(
            log,
            "{k} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            s.timestamp,
            o.x,
            o.y,
            o.z,
            o.roll,
            o.pitch,
            o.yaw,
            s.gps.position.x,
            s.gps.position.y,
            s.gps.valid as u8,
            g.translation.x,
            g.translation.y,
            g.translation.z,
            q[0],
            q[1],
            q[2],
            q[3]
        )
        .expect("writing to a string");
        for (ci, masks) in source.masks(k)?.iter().enumerate() {
            for m in masks {
                write_pbm(m, &mask_path(dir, k, ci, m.class))?;
            }
        }
    }
    fs::write(dir.join("log.txt"), log)?;
    Ok(())
}

/// Parses `log.txt`.
pub fn read_sequence_log(text: &str) -> Result<Vec<FrameSensors>, PipelineError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| PipelineError::Sequence(format!("log line {}: {m}", i + 1));
        let v: Vec<f64> = line.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("not a number"))?;
        if v.len() != 18 {
            return Err(bad("expected 18 fields"));
        }
        if v[0] as usize != frames.len() {
            return Err(bad("frames must be numbered consecutively from 0"));
        }
        let odometry = EulerPose::new(v[5], v[6], v[7], v[2], v[3], v[4]).to_pose();
        frames.push(FrameSensors {
            timestamp: v[1],
            odometry,
            gps: GpsFix { position: Vector2::new(v[8], v[9]), valid: v[10] != 0.0 },
            ground_truth: Pose::from_translation_quaternion(Vector3::new(v[11], v[12], v[13]), [v[14], v[15], v[16], v[17]]),
        });
    }
    Ok(frames)
}

/// A sequence read from disk; masks are loaded per frame.
#[derive(Clone, Debug)]
pub struct DirSequence {
    pub dir: PathBuf,
    pub map: HdMap,
    pub cameras: Vec<CameraModel>,
    pub frames: Vec<FrameSensors>,
}

impl DirSequence {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.join("log.txt").is_file() {
            return Err(PipelineError::SequenceNotFound(dir));
        }
        let seq_err = |e: String| PipelineError::Sequence(e);
        let map = load_map(dir.join("map.txt")).map_err(|e| seq_err(e.to_string()))?;
        let file: CameraFile =
            toml::from_str(&fs::read_to_string(dir.join("cameras.toml"))?).map_err(|e| seq_err(e.to_string()))?;
        let cameras = file
            .cameras
            .iter()
            .map(|c| {
                let t = Vector3::from(c.translation);
                let mut cam = CameraModel::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height, Pose::from_translation_quaternion(t, c.quaternion))
                    .map_err(|e| seq_err(e.to_string()))?;
                cam.z_min = c.z_min;
                Ok(cam)
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let frames = read_sequence_log(&fs::read_to_string(dir.join("log.txt"))?)?;
        Ok(DirSequence { dir, map, cameras, frames })
    }
}

impl FrameSource for DirSequence {
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
        self.cameras
            .iter()
            .enumerate()
            .map(|(ci, cam)| {
                let read = |class| {
                    let m = read_pbm(&mask_path(&self.dir, frame, ci, class), class)
                        .map_err(|message| SimError::Frame { frame, message })?;
                    if (m.width, m.height) != (cam.width, cam.height) {
                        return Err(SimError::Frame { frame, message: "mask size differs from the camera".into() });
                    }
                    Ok(m)
                };
                Ok([read(LandmarkClass::LaneMarking)?, read(LandmarkClass::Pole)?, read(LandmarkClass::Signboard)?])
            })
            .collect()
    }
}

fn write_pbm(mask: &SegMask, path: &Path) -> std::io::Result<()> {
    let row_bytes = mask.width.div_ceil(8);
    let mut out = format!("P4\n{} {}\n", mask.width, mask.height).into_bytes();
    for y in 0..mask.height {
        let mut row = vec![0u8; row_bytes];
        for x in 0..mask.width {
            if mask.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    fs::write(path, out)
}

fn read_pbm(path: &Path, class: LandmarkClass) -> Result<SegMask, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format!("{}: truncated header", path.display()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P4" {
        return Err(format!("{}: not a binary PBM", path.display()));
    }
    let (w, h): (usize, usize) = match (fields[1].parse(), fields[2].parse()) {
        (Ok(w), Ok(h)) => (w, h),
        _ => return Err(format!("{}: bad size", path.display())),
    };
    let row_bytes = w.div_ceil(8);
    let data = bytes.get(pos..pos + row_bytes * h).ok_or_else(|| format!("{}: truncated pixels", path.display()))?;
    Ok(SegMask::from_fn(w, h, class, |x, y| data[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{front_camera, generate_world, rear_camera, simulate_sequence, SensorNoiseSpec, WorldSpec};

    #[test]
    fn pbm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pbm");
        let m = SegMask::from_fn(13, 5, LandmarkClass::Pole, |x, y| (x * 3 + y) % 4 == 0);
        write_pbm(&m, &p).unwrap();
        assert_eq!(read_pbm(&p, LandmarkClass::Pole).unwrap(), m);
    }

    #[test]
    fn directory_round_trip() {
        let world = generate_world(&WorldSpec::highway(6)).unwrap();
        let mut seq = simulate_sequence(
            world.map,
            &world.trajectory,
            &world.timestamps,
            vec![front_camera(), rear_camera()],
            &SensorNoiseSpec { gps_dropout: 0.5, ..Default::default() },
            3,
        )
        .unwrap();
        seq.blank(2..3, Some(1));
        let dir = tempfile::tempdir().unwrap();
        write_sequence(&seq, dir.path()).unwrap();
        let back = DirSequence::open(dir.path()).unwrap();
        assert_eq!(back.map.landmarks(), seq.map.landmarks());
        assert_eq!(back.cameras.len(), 2);
        for (a, b) in back.cameras.iter().zip(&seq.cameras) {
            assert!(a.extrinsic_bc.inverse().compose(&b.extrinsic_bc).log().norm() < 1e-12);
            assert_eq!((a.fx, a.cx, a.width), (b.fx, b.cx, b.width));
        }
        for (a, b) in back.frames.iter().zip(&seq.frames) {
            assert_eq!(a.timestamp, b.timestamp);
            assert_eq!(a.gps, b.gps);
            assert!(a.odometry.inverse().compose(&b.odometry).log().norm() < 1e-12);
            assert!(a.ground_truth.inverse().compose(&b.ground_truth).log().norm() < 1e-12);
        }
        for k in 0..6 {
            assert_eq!(back.masks(k).unwrap(), seq.masks(k).unwrap());
        }
    }

    #[test]
    fn missing_directory() {
        assert!(matches!(DirSequence::open("/nonexistent/seq"), Err(PipelineError::SequenceNotFound(_))));
    }
}
