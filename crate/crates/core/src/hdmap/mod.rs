//! Vector HD map: typed 3-D polylines in the world frame, a spatial index
//! for radius queries, fixed-interval sampling and local-map cropping.

mod io;
mod kdtree;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use kdtree::{KdItem, KdTree};

pub use io::{load_map, parse_map, save_map, write_map, MAP_FORMAT_VERSION};

/// Longest piece of a segment stored as one index entry.
const INDEX_PIECE: f64 = 4.0;
const MIN_POINT_SPACING: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("map parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid landmark {id}: {message}")]
    Validation { id: u64, message: String },
    #[error("map i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkClass {
    LaneMarking,
    Pole,
    Signboard,
}

impl LandmarkClass {
    pub const ALL: [LandmarkClass; 3] = [LandmarkClass::LaneMarking, LandmarkClass::Pole, LandmarkClass::Signboard];

    pub fn index(self) -> usize {
        match self {
            LandmarkClass::LaneMarking => 0,
            LandmarkClass::Pole => 1,
            LandmarkClass::Signboard => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LandmarkClass::LaneMarking => "lane_marking",
            LandmarkClass::Pole => "pole",
            LandmarkClass::Signboard => "signboard",
        }
    }

    /// Vertical landmarks constrain the longitudinal position.
    pub fn is_vertical(self) -> bool {
        !matches!(self, LandmarkClass::LaneMarking)
    }

    fn min_points(self) -> usize {
        match self {
            LandmarkClass::Signboard => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for LandmarkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LandmarkClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lane_marking" | "lane" | "la" => Ok(LandmarkClass::LaneMarking),
            "pole" | "po" => Ok(LandmarkClass::Pole),
            "signboard" | "sign" | "sb" => Ok(LandmarkClass::Signboard),
            other => Err(format!("unknown landmark class '{other}'")),
        }
    }
}

/// A map element. Signboards are closed rings: the segment from the last
/// point back to the first is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct Landmark {
    pub id: u64,
    pub class: LandmarkClass,
    pub points: Vec<Vector3<f64>>,
}

impl Landmark {
    pub fn new(id: u64, class: LandmarkClass, points: Vec<Vector3<f64>>) -> Result<Self, MapError> {
        let lm = Landmark { id, class, points };
        lm.validate()?;
        Ok(lm)
    }

    pub fn is_closed(&self) -> bool {
        self.class == LandmarkClass::Signboard
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let need = self.class.min_points();
        if self.points.len() < need {
            return Err(MapError::Validation {
                id: self.id,
                message: format!("{} needs at least {need} points, got {}", self.class, self.points.len()),
            });
        }
        if self.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(MapError::Validation { id: self.id, message: "non-finite coordinate".into() });
        }
        for (i, (a, b)) in self.segments().enumerate() {
            if (b - a).norm() <= MIN_POINT_SPACING {
                return Err(MapError::Validation {
                    id: self.id,
                    message: format!("segment {i} is degenerate (repeated point)"),
                });
            }
        }
        Ok(())
    }

    /// Segment endpoints in order, including the closing segment of rings.
    pub fn segments(&self) -> impl Iterator<Item = (Vector3<f64>, Vector3<f64>)> + '_ {
        let n = self.points.len();
        let count = if self.is_closed() { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn distance_to(&self, q: &Vector3<f64>) -> f64 {
        if self.points.len() == 1 {
            return (self.points[0] - q).norm();
        }
        self.segments()
            .map(|(a, b)| point_segment_distance(q, &a, &b))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn point_segment_distance(q: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((q - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - q).norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledPoint {
    pub position: Vector3<f64>,
    pub class: LandmarkClass,
    pub source_id: u64,
    /// Arclength from the first landmark point.
    pub arclength: f64,
}

/// Immutable map with a spatial index; safe to share across threads.
#[derive(Clone, Debug, Default)]
pub struct HdMap {
    landmarks: Vec<Landmark>,
    index: KdTree,
    inflation: f64,
}

impl HdMap {
    pub fn new(landmarks: Vec<Landmark>) -> Result<Self, MapError> {
        let mut seen = BTreeSet::new();
        for lm in &landmarks {
            lm.validate()?;
            if !seen.insert(lm.id) {
                return Err(MapError::Validation { id: lm.id, message: "duplicate landmark id".into() });
            }
        }
        let mut items = Vec::new();
        let mut inflation: f64 = 0.0;
        for (li, lm) in landmarks.iter().enumerate() {
            if lm.points.len() == 1 {
                items.push(KdItem { key: lm.points[0], payload: li });
                continue;
            }
            for (a, b) in lm.segments() {
                let len = (b - a).norm();
                let pieces = (len / INDEX_PIECE).ceil().max(1.0) as usize;
                let half = 0.5 * len / pieces as f64;
                inflation = inflation.max(half);
                for k in 0..pieces {
                    let t = (k as f64 + 0.5) / pieces as f64;
                    items.push(KdItem { key: a + (b - a) * t, payload: li });
                }
            }
        }
        Ok(HdMap { landmarks, index: KdTree::build(items), inflation })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    /// Landmarks whose minimum distance to `center` is at most `radius`,
    /// in storage order.
    pub fn query_radius(&self, center: &Vector3<f64>, radius: f64) -> Vec<&Landmark> {
        if radius.is_nan() || radius <= 0.0 {
            return Vec::new();
        }
        let mut hits = BTreeSet::new();
        self.index.within(center, radius + self.inflation, |li| {
            hits.insert(li);
        });
        hits.into_iter()
            .map(|li| &self.landmarks[li])
            .filter(|lm| lm.distance_to(center) <= radius)
            .collect()
    }

    /// Axis-aligned bounds of all landmark points, `None` for an empty map.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let mut it = self.landmarks.iter().flat_map(|l| l.points.iter());
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }
}

/// Samples at arclength `0, interval, 2*interval, ...` plus the final
/// endpoint. Closed rings are walked once around without repeating the
/// start point.
pub fn sample_polyline(lm: &Landmark, interval: f64) -> Vec<SampledPoint> {
    assert!(interval > 0.0, "sampling interval must be positive");
    let mut out = Vec::new();
    let push = |out: &mut Vec<SampledPoint>, p: Vector3<f64>, s: f64| {
        out.push(SampledPoint { position: p, class: lm.class, source_id: lm.id, arclength: s });
    };
    let total = lm.length();
    let eps = 1e-9 * total.max(1.0);
    let mut seg_start = 0.0;
    let mut k = 0usize;
    let mut last = None;
    for (a, b) in lm.segments() {
        let len = (b - a).norm();
        loop {
            let s = k as f64 * interval;
            if s > seg_start + len + eps || s > total - eps {
                break;
            }
            let t = ((s - seg_start) / len).clamp(0.0, 1.0);
            push(&mut out, a + (b - a) * t, s);
            k += 1;
        }
        seg_start += len;
        last = Some(b);
    }
    if !lm.is_closed() {
        if let Some(end) = last {
            push(&mut out, end, total);
        }
    }
    out
}

/// Samples of every landmark within `range` of the vehicle position,
/// ordered by `(class, id, arclength)`.
pub fn crop_local_map(map: &HdMap, pose_wb: &Pose, range: f64, interval: f64) -> Vec<SampledPoint> {
    crop_around(map, &pose_wb.translation, range, interval)
}

/// Like [`crop_local_map`] with the query disc centred `ahead` meters in
/// front of the vehicle along its x axis.
pub fn crop_local_map_ahead(map: &HdMap, pose_wb: &Pose, range: f64, interval: f64, ahead: f64) -> Vec<SampledPoint> {
    let center = pose_wb.transform_point(&Vector3::new(ahead, 0.0, 0.0));
    crop_around(map, &center, range, interval)
}

fn crop_around(map: &HdMap, center: &Vector3<f64>, range: f64, interval: f64) -> Vec<SampledPoint> {
    let mut lms = map.query_radius(center, range);
    lms.sort_by_key(|l| (l.class, l.id));
    lms.into_iter().flat_map(|l| sample_polyline(l, interval)).collect()
}
