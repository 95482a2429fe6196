//! Initialization: a coarse pose from two GPS fixes, refined by exhaustive
//! search over a lateral/longitudinal/yaw grid.

mod cost;

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::hdmap::{HdMap, LandmarkClass};

pub use cost::{build_frame_costmaps, evaluate_pose_cost, subsample_points, CostEvaluation, FrameCostMaps, FrameInputs};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InitError {
    #[error("GPS fixes are {0:.2} m apart, below the required separation")]
    InsufficientSeparation(f64),
    #[error("no lane marking within the height lookup radius")]
    EmptyMapNeighborhood,
    #[error("no map sample projects into any camera")]
    NoVisiblePoints,
    #[error("every grid candidate was rejected")]
    AllCandidatesInvalid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Coarse pose at `fix_b` heading from `fix_a` to `fix_b`, with roll and
/// pitch zero and height taken from the nearest lane marking.
pub fn coarse_pose_from_gps(
    fix_a: &Vector2<f64>,
    fix_b: &Vector2<f64>,
    map: &HdMap,
    min_separation: f64,
    z_radius: f64,
) -> Result<Pose, InitError> {
    let d = fix_b - fix_a;
    if d.norm() < min_separation {
        return Err(InitError::InsufficientSeparation(d.norm()));
    }
    let (z, _) = nearest_lane(map, fix_b, z_radius).ok_or(InitError::EmptyMapNeighborhood)?;
    Ok(Pose::from_xyz_yaw(fix_b.x, fix_b.y, z, d.y.atan2(d.x)))
}

/// Height and direction of the lane marking closest (in the plane) to `xy`.
fn nearest_lane(map: &HdMap, xy: &Vector2<f64>, radius: f64) -> Option<(f64, Vector2<f64>)> {
    let center = Vector3::new(xy.x, xy.y, 0.0);
    // The height of the road is unknown here, so search a tall cylinder.
    let candidates = map.query_radius(&center, radius.hypot(radius));
    let mut best: Option<(f64, f64, Vector2<f64>)> = None;
    for lm in candidates.into_iter().filter(|l| l.class == LandmarkClass::LaneMarking) {
        for (a, b) in lm.segments() {
            let ab = (b - a).xy();
            let len2 = ab.norm_squared();
            let t = if len2 > 0.0 { ((xy - a.xy()).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let q = a + (b - a) * t;
            let dist = (q.xy() - xy).norm();
            if dist <= radius && best.is_none_or(|(bd, _, _)| dist < bd) && len2 > 0.0 {
                best = Some((dist, q.z, ab / len2.sqrt()));
            }
        }
    }
    best.map(|(_, z, dir)| (z, dir))
}

/// Snaps `yaw` to the direction of the nearest lane marking (whichever of
/// its two orientations is closer). Returns `yaw` unchanged when no lane is
/// within `radius`.
pub fn snap_yaw_to_lane(map: &HdMap, xy: &Vector2<f64>, yaw: f64, radius: f64) -> f64 {
    let Some((_, dir)) = nearest_lane(map, xy, radius) else {
        return yaw;
    };
    let lane = dir.y.atan2(dir.x);
    let diff = wrap_angle(lane - yaw);
    if diff.abs() <= std::f64::consts::FRAC_PI_2 {
        lane
    } else {
        wrap_angle(lane + std::f64::consts::PI)
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let r = (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI);
    r - std::f64::consts::PI
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAxisKind {
    Lateral,
    Longitudinal,
    Yaw,
}

/// Symmetric search axis `-range, ..., 0, ..., range` in steps of `step`
/// (meters, or radians for yaw).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub axis: GridAxisKind,
    pub range: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(axis: GridAxisKind, range: f64, step: f64) -> Self {
        GridAxis { axis, range, step }
    }

    /// Number of steps on each side of zero.
    pub fn half_count(&self) -> usize {
        (self.range / self.step + 1e-9).floor() as usize
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.half_count() as i64;
        (-n..=n).map(|i| i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    /// Candidates seeing less than this share of the samples are rejected.
    pub min_visible: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            axes: vec![
                GridAxis::new(GridAxisKind::Lateral, 10.0, 0.2),
                GridAxis::new(GridAxisKind::Longitudinal, 5.0, 0.5),
                GridAxis::new(GridAxisKind::Yaw, 6f64.to_radians(), 1f64.to_radians()),
            ],
            min_visible: 0.3,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), InitError> {
        if self.axes.is_empty() {
            return Err(InitError::InvalidGrid("no axes".into()));
        }
        for a in &self.axes {
            if !(a.step > 0.0) || a.step > a.range + 1e-12 {
                return Err(InitError::InvalidGrid(format!("{:?}: need 0 < step <= range", a.axis)));
            }
        }
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|b| b.axis == a.axis) {
                return Err(InitError::InvalidGrid(format!("{:?} listed twice", a.axis)));
            }
        }
        if !(0.0..=1.0).contains(&self.min_visible) {
            return Err(InitError::InvalidGrid("min_visible must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn candidate_count(&self) -> usize {
        self.axes.iter().map(|a| 2 * a.half_count() + 1).product()
    }

    /// Signed step indices of candidate `flat` (last axis fastest).
    fn indices(&self, mut flat: usize) -> Vec<i64> {
        let mut idx = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            let n = 2 * a.half_count() + 1;
            idx[k] = (flat % n) as i64 - a.half_count() as i64;
            flat /= n;
        }
        idx
    }

    /// Pose of candidate `flat`, offset in the coarse pose's vehicle frame.
    pub fn candidate(&self, coarse: &Pose, flat: usize) -> Pose {
        let (mut lat, mut lon, mut yaw) = (0.0, 0.0, 0.0);
        for (a, i) in self.axes.iter().zip(self.indices(flat)) {
            let v = i as f64 * a.step;
            match a.axis {
                GridAxisKind::Lateral => lat = v,
                GridAxisKind::Longitudinal => lon = v,
                GridAxisKind::Yaw => yaw = v,
            }
        }
        coarse.compose(&Pose::from_xyz_yaw(lon, lat, 0.0, yaw))
    }

    /// Distance from the grid origin in steps, used to break ties.
    fn displacement(&self, flat: usize) -> i64 {
        self.indices(flat).iter().map(|i| i * i).sum()
    }
}

/// Exhaustive grid search around `coarse`. Candidates are evaluated in
/// parallel; the minimum is selected by `(cost, displacement, index)` so
/// the result does not depend on scheduling.
pub fn grid_search_refine(coarse: &Pose, grid: &GridSpec, inputs: &FrameInputs) -> Result<CostEvaluation, InitError> {
    grid.validate()?;
    let best = (0..grid.candidate_count())
        .into_par_iter()
        .filter_map(|flat| {
            let eval = evaluate_pose_cost(&grid.candidate(coarse, flat), inputs).ok()?;
            (eval.visible_fraction >= grid.min_visible).then_some((eval, flat))
        })
        .min_by(|(a, ia), (b, ib)| {
            a.mean_cost
                .total_cmp(&b.mean_cost)
                .then(grid.displacement(*ia).cmp(&grid.displacement(*ib)))
                .then(ia.cmp(ib))
        });
    best.map(|(e, _)| e).ok_or(InitError::AllCandidatesInvalid)
}
