//! Trajectories and the relative pose error.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::geometry::Pose;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("trajectory i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("timestamps must be strictly increasing (line {0})")]
    NonIncreasing(usize),
    #[error("no estimate/reference pairs to evaluate")]
    NoAssociations,
    #[error("frame interval must be at least 1")]
    BadInterval,
}

/// Timestamped poses, strictly increasing in time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub stamps: Vec<f64>,
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory::default()
    }

    pub fn push(&mut self, stamp: f64, pose: Pose) {
        debug_assert!(self.stamps.last().is_none_or(|&t| stamp > t), "timestamps must increase");
        self.stamps.push(stamp);
        self.poses.push(pose);
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    /// One `t tx ty tz qx qy qz qw` line per pose.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (t, p) in self.stamps.iter().zip(&self.poses) {
            let q = p.quaternion();
            let v = p.translation;
            writeln!(s, "{t:.6} {:.9} {:.9} {:.9} {:.12} {:.12} {:.12} {:.12}", v.x, v.y, v.z, q[0], q[1], q[2], q[3])
                .expect("writing to a string");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut traj = Trajectory::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| EvalError::Parse { line: i + 1, message: e.to_string() })?;
            if vals.len() != 8 {
                return Err(EvalError::Parse { line: i + 1, message: format!("expected 8 values, found {}", vals.len()) });
            }
            if traj.stamps.last().is_some_and(|&t| vals[0] <= t) {
                return Err(EvalError::NonIncreasing(i + 1));
            }
            let pose = Pose::from_translation_quaternion(Vector3::new(vals[1], vals[2], vals[3]), [vals[4], vals[5], vals[6], vals[7]]);
            traj.push(vals[0], pose);
        }
        Ok(traj)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Trajectory::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Pairs each estimate pose with the reference pose nearest in time,
/// keeping matches within `max_dt` seconds.
pub fn associate(estimate: &Trajectory, reference: &Trajectory, max_dt: f64) -> Vec<(f64, Pose, Pose)> {
    let mut out = Vec::new();
    let mut j = 0;
    for (t, p) in estimate.stamps.iter().zip(&estimate.poses) {
        if reference.is_empty() {
            break;
        }
        while j + 1 < reference.len() && (reference.stamps[j + 1] - t).abs() <= (reference.stamps[j] - t).abs() {
            j += 1;
        }
        if (reference.stamps[j] - t).abs() <= max_dt {
            out.push((*t, *p, reference.poses[j]));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpePair {
    pub index: usize,
    pub stamp: f64,
    pub translation: f64,
    pub lateral: f64,
    pub longitudinal: f64,
    pub rotation_deg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RpeReport {
    pub frame_interval: usize,
    pub pairs: Vec<RpePair>,
    pub max_translation: f64,
    pub mean_translation: f64,
    pub median_translation: f64,
    pub mean_lateral: f64,
    pub mean_longitudinal: f64,
    pub mean_rotation_deg: f64,
}

pub const ASSOCIATION_TOLERANCE: f64 = 0.05;

/// Relative pose error over `interval` frames. Each pair's translation
/// error is split into longitudinal (x) and lateral (y) parts in the
/// reference body frame at the pair's first frame.
pub fn compute_rpe(estimate: &Trajectory, reference: &Trajectory, interval: usize) -> Result<RpeReport, EvalError> {
    if interval == 0 {
        return Err(EvalError::BadInterval);
    }
    let matched = associate(estimate, reference, ASSOCIATION_TOLERANCE);
    if matched.len() <= interval {
        return Err(EvalError::NoAssociations);
    }
    let pairs: Vec<RpePair> = (0..matched.len() - interval)
        .map(|i| {
            let (stamp, p0, q0) = matched[i];
            let (_, p1, q1) = matched[i + interval];
            let dp = p0.inverse().compose(&p1);
            let dq = q0.inverse().compose(&q1);
            let err = dq.inverse().compose(&dp);
            let d = dp.translation - dq.translation;
            RpePair {
                index: i,
                stamp,
                translation: err.translation.norm(),
                lateral: d.y.abs(),
                longitudinal: d.x.abs(),
                rotation_deg: err.angle().to_degrees(),
            }
        })
        .collect();
    Ok(RpeReport::from_pairs(interval, pairs))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl RpeReport {
    pub fn from_pairs(frame_interval: usize, pairs: Vec<RpePair>) -> Self {
        let mut t: Vec<f64> = pairs.iter().map(|p| p.translation).collect();
        t.sort_by(f64::total_cmp);
        let median = match t.len() {
            0 => 0.0,
            n if n % 2 == 1 => t[n / 2],
            n => 0.5 * (t[n / 2 - 1] + t[n / 2]),
        };
        RpeReport {
            frame_interval,
            max_translation: t.last().copied().unwrap_or(0.0),
            mean_translation: mean(pairs.iter().map(|p| p.translation)),
            median_translation: median,
            mean_lateral: mean(pairs.iter().map(|p| p.lateral)),
            mean_longitudinal: mean(pairs.iter().map(|p| p.longitudinal)),
            mean_rotation_deg: mean(pairs.iter().map(|p| p.rotation_deg)),
            pairs,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,stamp,translation,lateral,longitudinal,rotation_deg\n");
        for p in &self.pairs {
            writeln!(s, "{},{:?},{:?},{:?},{:?},{:?}", p.index, p.stamp, p.translation, p.lateral, p.longitudinal, p.rotation_deg)
                .expect("writing to a string");
        }
        s
    }

    pub fn parse_csv(text: &str, frame_interval: usize) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let bad = |m: String| EvalError::Parse { line: i + 1, message: m };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad("expected 6 columns".into()));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|e| bad(e.to_string()));
            pairs.push(RpePair {
                index: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                stamp: num(1)?,
                translation: num(2)?,
                lateral: num(3)?,
                longitudinal: num(4)?,
                rotation_deg: num(5)?,
            });
        }
        Ok(RpeReport::from_pairs(frame_interval, pairs))
    }

    /// Text block with the columns of the usual RPE table.
    pub fn summary(&self) -> String {
        format!(
            "RPE (interval {} frames, {} pairs)\n\
             3D translation (m): max {:.4}  mean {:.4}  median {:.4}\n\
             2D translation (m): lateral {:.4}  longitudinal {:.4}\n\
             rotation (deg): mean {:.4}\n",
            self.frame_interval,
            self.pairs.len(),
            self.max_translation,
            self.mean_translation,
            self.median_translation,
            self.mean_lateral,
            self.mean_longitudinal,
            self.mean_rotation_deg
        )
    }
}
