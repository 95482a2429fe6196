//! The alignment cost: mean of `1 - I_s(u)` over map samples that project
//! into some camera. Shared by the initializer and the tracker.

use nalgebra::{Vector2, Vector3};

use crate::costmap::{build_costmap, CostMap, CostMapConfig, SegMask};
use crate::geometry::{CameraModel, Pose};
use crate::hdmap::SampledPoint;

use super::InitError;

/// Cost maps of one frame: per camera, one map per class, or `None` when
/// the camera delivered nothing (all masks empty) and must be ignored.
pub type FrameCostMaps = Vec<Option<[CostMap; 3]>>;

/// Builds the cost maps for every camera of a frame.
pub fn build_frame_costmaps(masks: &[[SegMask; 3]], cfg: &CostMapConfig) -> FrameCostMaps {
    masks
        .iter()
        .map(|m| {
            if m.iter().all(SegMask::is_empty) {
                None
            } else {
                Some([build_costmap(&m[0], cfg), build_costmap(&m[1], cfg), build_costmap(&m[2], cfg)])
            }
        })
        .collect()
}

/// Borrowed view of everything the cost depends on besides the pose.
#[derive(Clone, Copy, Debug)]
pub struct FrameInputs<'a> {
    pub cameras: &'a [CameraModel],
    pub costmaps: &'a [Option<[CostMap; 3]>],
    pub points: &'a [SampledPoint],
}

impl<'a> FrameInputs<'a> {
    pub fn new(cameras: &'a [CameraModel], costmaps: &'a [Option<[CostMap; 3]>], points: &'a [SampledPoint]) -> Self {
        assert_eq!(cameras.len(), costmaps.len(), "one cost-map set per camera");
        FrameInputs { cameras, costmaps, points }
    }

    pub fn with_points(&self, points: &'a [SampledPoint]) -> Self {
        FrameInputs { points, ..*self }
    }

    /// Calls `visit(point_index, camera_index, p_c, u, map)` for every
    /// (point, active camera) pair whose projection lands in the image.
    pub(crate) fn for_each_visible(
        &self,
        pose_wb: &Pose,
        mut visit: impl FnMut(usize, usize, &Vector3<f64>, &Vector2<f64>, &CostMap),
    ) {
        let body_to_cam: Vec<Pose> = self.cameras.iter().map(|c| c.extrinsic_cb().compose(&pose_wb.inverse())).collect();
        for (pi, p) in self.points.iter().enumerate() {
            for (ci, cam) in self.cameras.iter().enumerate() {
                let Some(maps) = &self.costmaps[ci] else { continue };
                let p_c = body_to_cam[ci].transform_point(&p.position);
                if p_c.z <= cam.z_min {
                    continue;
                }
                let u = Vector2::new(cam.fx * p_c.x / p_c.z + cam.cx, cam.fy * p_c.y / p_c.z + cam.cy);
                let map = &maps[p.class.index()];
                if map.contains(&u) {
                    visit(pi, ci, &p_c, &u, map);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEvaluation {
    pub pose: Pose,
    /// Mean residual `1 - I_s` over visible observations.
    pub mean_cost: f64,
    /// Share of map samples seen by at least one camera.
    pub visible_fraction: f64,
    /// Number of visible (point, camera) observations.
    pub n_points: usize,
}

pub fn evaluate_pose_cost(pose: &Pose, inputs: &FrameInputs) -> Result<CostEvaluation, InitError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut seen = 0usize;
    let mut last = usize::MAX;
    inputs.for_each_visible(pose, |pi, _, _, u, map| {
        let (value, _) = map.sample_unchecked(u.x, u.y);
        sum += 1.0 - value;
        n += 1;
        if pi != last {
            seen += 1;
            last = pi;
        }
    });
    if n == 0 {
        return Err(InitError::NoVisiblePoints);
    }
    Ok(CostEvaluation {
        pose: *pose,
        mean_cost: sum / n as f64,
        visible_fraction: seen as f64 / inputs.points.len() as f64,
        n_points: n,
    })
}

/// Every `k`-th point so that at most `max_points` remain.
pub fn subsample_points(points: &[SampledPoint], max_points: usize) -> Vec<SampledPoint> {
    if max_points == 0 || points.len() <= max_points {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(max_points);
    points.iter().step_by(stride).copied().collect()
}
