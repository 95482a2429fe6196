//! Geometric stand-in for semantic segmentation: map landmarks rasterized
//! as thick projected polylines, one binary mask per class.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::costmap::SegMask;
use crate::geometry::{transform_point, CameraModel, Pose};
use crate::hdmap::{crop_local_map, HdMap, LandmarkClass, SampledPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    /// Stripe width in pixels: a pixel is occupied when its centre lies
    /// within half this distance of a projected landmark.
    pub thickness: f64,
    /// Radius around the vehicle of the landmarks that get drawn.
    pub range: f64,
    /// Sampling interval along landmarks, meters.
    pub interval: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams { thickness: 3.0, range: 160.0, interval: 0.5 }
    }
}

/// Renders one mask per landmark class, indexed by `LandmarkClass::index`.
pub fn render_masks(map: &HdMap, cam: &CameraModel, pose_wb: &Pose, params: &RenderParams) -> [SegMask; 3] {
    let mut masks = LandmarkClass::ALL.map(|c| SegMask::empty(cam.width, cam.height, c));
    let samples = crop_local_map(map, pose_wb, params.range, params.interval);
    for run in samples.chunk_by(|a, b| a.source_id == b.source_id) {
        let mask = &mut masks[run[0].class.index()];
        let closed = run[0].class == LandmarkClass::Signboard && run.len() > 2;
        let pairs = run.windows(2).map(|w| (&w[0], &w[1]));
        let closing = closed.then(|| (&run[run.len() - 1], &run[0]));
        for (a, b) in pairs.chain(closing) {
            draw_segment(mask, cam, pose_wb, a, b, 0.5 * params.thickness);
        }
    }
    masks
}

fn draw_segment(mask: &mut SegMask, cam: &CameraModel, pose_wb: &Pose, a: &SampledPoint, b: &SampledPoint, radius: f64) {
    let mut pa = transform_point(pose_wb, &cam.extrinsic_bc, &a.position);
    let mut pb = transform_point(pose_wb, &cam.extrinsic_bc, &b.position);
    // Keep the part of the segment strictly in front of the near plane.
    let near = cam.z_min * (1.0 + 1e-9);
    if pa.z < near && pb.z < near {
        return;
    }
    if pa.z < near {
        pa = clip_to_depth(&pb, &pa, near);
    } else if pb.z < near {
        pb = clip_to_depth(&pa, &pb, near);
    }
    let (Ok(ua), Ok(ub)) = (cam.project(&pa), cam.project(&pb)) else {
        return;
    };
    let lo = Vector2::new(-radius, -radius);
    let hi = Vector2::new((cam.width - 1) as f64 + radius, (cam.height - 1) as f64 + radius);
    let Some((ua, ub)) = clip_segment(ua, ub, lo, hi) else {
        return;
    };
    let x0 = (ua.x.min(ub.x) - radius).floor().max(0.0) as usize;
    let x1 = ((ua.x.max(ub.x) + radius).ceil() as usize).min(cam.width - 1);
    let y0 = (ua.y.min(ub.y) - radius).floor().max(0.0) as usize;
    let y1 = ((ua.y.max(ub.y) + radius).ceil() as usize).min(cam.height - 1);
    let d = ub - ua;
    let len2 = d.norm_squared();
    let t2 = radius * radius;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let q = Vector2::new(x as f64, y as f64);
            let t = if len2 > 0.0 { ((q - ua).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
            if (ua + d * t - q).norm_squared() <= t2 {
                mask.data[y * cam.width + x] = 1;
            }
        }
    }
}

fn clip_to_depth(inside: &Vector3<f64>, outside: &Vector3<f64>, z: f64) -> Vector3<f64> {
    let t = (inside.z - z) / (inside.z - outside.z);
    inside + (outside - inside) * t
}

/// Liang-Barsky clip of segment `a-b` to the box `[lo, hi]`.
fn clip_segment(a: Vector2<f64>, b: Vector2<f64>, lo: Vector2<f64>, hi: Vector2<f64>) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((a + d * t0, a + d * t1))
}
