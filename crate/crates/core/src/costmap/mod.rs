//! Binary semantic masks and the smooth cost maps built from them.
//!
//! A cost map peaks at 1.0 on the landmark and decays towards 0.0 with
//! distance, so the alignment residual `I(u) - 1` vanishes when a map
//! point projects onto its class in the image.

mod distance;
mod io;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::hdmap::LandmarkClass;

pub use distance::{chessboard_distance, euclidean_distance_squared, laplacian_edges};
pub use io::{read_costmap, read_mask, write_costmap, write_mask, ImageIoError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostMapError {
    #[error("sample point ({0:.3}, {1:.3}) outside the cost map")]
    OutOfBounds(f64, f64),
}

/// Binary occupancy image, row-major, one byte per pixel (0 or 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMask {
    pub width: usize,
    pub height: usize,
    pub class: LandmarkClass,
    pub data: Vec<u8>,
}

impl SegMask {
    pub fn empty(width: usize, height: usize, class: LandmarkClass) -> Self {
        SegMask { width, height, class, data: vec![0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, class: LandmarkClass, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = SegMask::empty(width, height, class);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y) as u8;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    pub fn occupied(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn clear(&mut self) {
        self.data.fill(0);
    }
}

/// Scalar field in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMap {
    pub width: usize,
    pub height: usize,
    pub class: LandmarkClass,
    pub data: Vec<f32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorphologyParams {
    /// Chessboard radius of the optional erosion pre-pass (0 disables it).
    pub erode: usize,
    /// Pixels within this chessboard distance of the mask hold 1.0.
    pub plateau_dilate: usize,
    /// Width in pixels of the linear fall-off after the plateau.
    pub ramp_width: usize,
}

impl Default for MorphologyParams {
    fn default() -> Self {
        MorphologyParams { erode: 0, plateau_dilate: 0, ramp_width: 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMapKind {
    #[default]
    Morphology,
    DistanceTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostMapConfig {
    pub kind: CostMapKind,
    pub morphology: MorphologyParams,
    /// Truncation distance in pixels for the distance-transform variant.
    pub truncation: f64,
}

impl Default for CostMapConfig {
    fn default() -> Self {
        CostMapConfig { kind: CostMapKind::Morphology, morphology: MorphologyParams::default(), truncation: 22.0 }
    }
}

/// Morphology ramp value for a chessboard distance `d`.
#[inline]
pub fn ramp_value(d: u32, plateau: usize, ramp: usize) -> f32 {
    let d = d as f64;
    let p = plateau as f64;
    if d <= p {
        1.0
    } else {
        (1.0 - (d - p) / ramp as f64).max(0.0) as f32
    }
}

fn erode(mask: &SegMask, radius: usize) -> SegMask {
    if radius == 0 {
        return mask.clone();
    }
    // A pixel survives when its chessboard distance to the background
    // exceeds `radius`; the image border is not background.
    let mut inverse = mask.clone();
    for v in &mut inverse.data {
        *v = (*v == 0) as u8;
    }
    let d = chessboard_distance(&inverse);
    let mut out = mask.clone();
    for (o, &dist) in out.data.iter_mut().zip(&d) {
        *o = (*o != 0 && dist > radius as u32) as u8;
    }
    out
}

/// Lane-marking and pole cost map: optional erosion, then a flat-topped
/// chessboard-distance ramp.
pub fn build_costmap_morphology(mask: &SegMask, params: &MorphologyParams) -> CostMap {
    assert!(params.ramp_width >= 1, "ramp_width must be at least 1");
    let eroded = erode(mask, params.erode);
    let d = chessboard_distance(&eroded);
    CostMap {
        width: mask.width,
        height: mask.height,
        class: mask.class,
        data: d.iter().map(|&d| ramp_value(d, params.plateau_dilate, params.ramp_width)).collect(),
    }
}

/// Signboard cost map: Laplacian edges of the filled mask, then the
/// morphology ramp around the edge set.
pub fn build_costmap_signboard(mask: &SegMask, params: &MorphologyParams) -> CostMap {
    let edges = laplacian_edges(mask);
    build_costmap_morphology(&edges, &MorphologyParams { erode: 0, ..*params })
}

/// Truncated Euclidean distance transform `max(0, 1 - d / truncation)`.
pub fn build_costmap_distance_transform(mask: &SegMask, truncation: f64) -> CostMap {
    assert!(truncation > 0.0, "truncation must be positive");
    let d2 = euclidean_distance_squared(mask);
    CostMap {
        width: mask.width,
        height: mask.height,
        class: mask.class,
        data: d2.iter().map(|&d2| (1.0 - d2.sqrt() / truncation).max(0.0) as f32).collect(),
    }
}

/// Builds the cost map for a mask according to its class and the chosen
/// builder.
pub fn build_costmap(mask: &SegMask, cfg: &CostMapConfig) -> CostMap {
    match cfg.kind {
        CostMapKind::DistanceTransform => {
            let source = if mask.class == LandmarkClass::Signboard { laplacian_edges(mask) } else { mask.clone() };
            build_costmap_distance_transform(&source, cfg.truncation)
        }
        CostMapKind::Morphology => match mask.class {
            LandmarkClass::Signboard => build_costmap_signboard(mask, &cfg.morphology),
            _ => build_costmap_morphology(mask, &cfg.morphology),
        },
    }
}

impl CostMap {
    pub fn constant(width: usize, height: usize, class: LandmarkClass, value: f32) -> Self {
        CostMap { width, height, class, data: vec![value; width * height] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn contains(&self, u: &Vector2<f64>) -> bool {
        u.x >= 0.0 && u.y >= 0.0 && u.x <= (self.width - 1) as f64 && u.y <= (self.height - 1) as f64
    }

    /// Bilinear value and its exact gradient `(dI/du, dI/dv)` inside the
    /// containing cell. The last row and column use the cell to their
    /// left/above so that the full closed domain is sampleable.
    pub fn sample_bilinear(&self, u: &Vector2<f64>) -> Result<(f64, Vector2<f64>), CostMapError> {
        if !self.contains(u) {
            return Err(CostMapError::OutOfBounds(u.x, u.y));
        }
        Ok(self.sample_unchecked(u.x, u.y))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, x: f64, y: f64) -> (f64, Vector2<f64>) {
        let (x0, fx) = cell(x, self.width);
        let (y0, fy) = cell(y, self.height);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let i00 = self.at(x0, y0) as f64;
        let i10 = self.at(x1, y0) as f64;
        let i01 = self.at(x0, y1) as f64;
        let i11 = self.at(x1, y1) as f64;
        let top = i00 + (i10 - i00) * fx;
        let bottom = i01 + (i11 - i01) * fx;
        let value = top + (bottom - top) * fy;
        let gx = (i10 - i00) * (1.0 - fy) + (i11 - i01) * fy;
        let gy = bottom - top;
        (value, Vector2::new(gx, gy))
    }
}

#[inline]
fn cell(x: f64, size: usize) -> (usize, f64) {
    if size < 2 {
        return (0, 0.0);
    }
    let i = (x.floor() as usize).min(size - 2);
    (i, x - i as f64)
}
