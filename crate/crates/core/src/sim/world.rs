//! Procedural highway: a reference line with piecewise-constant curvature,
//! parallel lane markings, roadside poles and signboards, and the ego
//! vehicle's ground-truth trajectory.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::hdmap::{HdMap, Landmark, LandmarkClass};

use super::SimError;

/// Road piece of constant curvature (1/m, positive turns left).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub length: f64,
    #[serde(default)]
    pub curvature: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignboardSpec {
    /// Position along the reference line, meters.
    pub s: f64,
    /// Offset of the board centre from the reference line (+ left), meters.
    pub lateral: f64,
    pub width: f64,
    pub height: f64,
    /// Height of the lower edge above the road.
    pub elevation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub lane_count: usize,
    pub lane_width: f64,
    /// Lane the vehicle drives in, 0 being the rightmost.
    pub ego_lane: usize,
    pub road: Vec<RoadSegment>,
    /// Length of each lane-marking landmark; markings are stored in pieces.
    pub marking_chunk: f64,
    pub vertex_spacing: f64,
    /// Spacing of roadside poles on both sides; 0 disables poles.
    pub pole_spacing: f64,
    pub pole_height: f64,
    /// Distance of the pole rows beyond the outermost markings.
    pub pole_offset: f64,
    /// Uniform jitter of pole positions along the road.
    pub pole_jitter: f64,
    pub signboards: Vec<SignboardSpec>,
    /// In-lane weave of the ego vehicle (sinusoid amplitude and period).
    pub weave_amplitude: f64,
    pub weave_period: f64,
    pub speed: f64,
    pub frame_rate: f64,
    pub frames: usize,
    /// Arclength of the first frame.
    pub start_s: f64,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec::highway(500)
    }
}

impl WorldSpec {
    /// Two-lane curved highway with poles every 30 m and five signboards.
    pub fn highway(frames: usize) -> Self {
        let road = vec![
            RoadSegment { length: 250.0, curvature: 0.0 },
            RoadSegment { length: 500.0, curvature: 1.0 / 900.0 },
            RoadSegment { length: 200.0, curvature: 0.0 },
            RoadSegment { length: 600.0, curvature: -1.0 / 1200.0 },
        ];
        let signboards = (0..5)
            .map(|i| SignboardSpec {
                s: 180.0 + 220.0 * i as f64,
                lateral: if i % 2 == 0 { -8.0 } else { 8.0 },
                width: 3.0,
                height: 1.8,
                elevation: 4.5,
            })
            .collect();
        let mut spec = WorldSpec {
            lane_count: 2,
            lane_width: 3.5,
            ego_lane: 0,
            road,
            marking_chunk: 10.0,
            vertex_spacing: 1.0,
            pole_spacing: 30.0,
            pole_height: 6.0,
            pole_offset: 1.5,
            pole_jitter: 1.0,
            signboards,
            weave_amplitude: 0.3,
            weave_period: 250.0,
            speed: 22.0,
            frame_rate: 10.0,
            frames,
            start_s: 20.0,
            seed: 7,
        };
        spec.extend_road_to_fit();
        spec
    }

    /// Straight two-lane road with markings only.
    pub fn straight(frames: usize) -> Self {
        let mut spec = WorldSpec {
            road: vec![RoadSegment { length: 100.0, curvature: 0.0 }],
            pole_spacing: 0.0,
            signboards: Vec::new(),
            ..WorldSpec::highway(frames)
        };
        spec.extend_road_to_fit();
        spec
    }

    /// Arclength needed to drive all frames and keep 200 m of map ahead.
    pub fn required_length(&self) -> f64 {
        self.start_s + self.speed * self.frames as f64 / self.frame_rate + 200.0
    }

    pub fn road_length(&self) -> f64 {
        self.road.iter().map(|r| r.length).sum()
    }

    /// Appends a straight piece so the road covers the whole drive.
    pub fn extend_road_to_fit(&mut self) {
        let missing = self.required_length() - self.road_length();
        if missing > 0.0 {
            self.road.push(RoadSegment { length: missing, curvature: 0.0 });
        }
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if self.lane_count == 0 || self.ego_lane >= self.lane_count {
            return bad(format!("ego lane {} not within {} lanes", self.ego_lane, self.lane_count));
        }
        if self.lane_width <= 0.0 || self.vertex_spacing <= 0.0 || self.marking_chunk < self.vertex_spacing {
            return bad("lane width, vertex spacing and chunk length must be positive".into());
        }
        if self.road.iter().any(|r| r.length <= 0.0) {
            return bad("road segments need positive length".into());
        }
        if self.road.iter().any(|r| r.curvature.abs() * (self.half_width() + self.pole_offset) >= 0.5) {
            return bad("curvature too tight for the road width".into());
        }
        if self.speed < 0.0 || self.frame_rate <= 0.0 {
            return bad("speed must be non-negative and frame rate positive".into());
        }
        if self.weave_amplitude.abs() > 0.5 * self.lane_width - 0.5 || (self.weave_amplitude != 0.0 && self.weave_period <= 0.0) {
            return bad("weave must keep the vehicle inside its lane".into());
        }
        if self.pole_spacing < 0.0
            || self.pole_jitter < 0.0
            || (self.pole_spacing > 0.0 && self.pole_jitter >= 0.5 * self.pole_spacing)
        {
            return bad("pole spacing/jitter invalid".into());
        }
        if self.road_length() + 1e-9 < self.required_length() {
            return bad(format!(
                "road is {:.1} m long but the drive needs {:.1} m",
                self.road_length(),
                self.required_length()
            ));
        }
        for sb in &self.signboards {
            if sb.width <= 0.0 || sb.height <= 0.0 || sb.s < 0.0 || sb.s > self.road_length() {
                return bad(format!("signboard at s={} is invalid", sb.s));
            }
        }
        Ok(())
    }

    fn half_width(&self) -> f64 {
        0.5 * self.lane_count as f64 * self.lane_width
    }

    /// Lateral offsets of the markings from the reference line.
    pub fn marking_offsets(&self) -> Vec<f64> {
        (0..=self.lane_count).map(|k| k as f64 * self.lane_width - self.half_width()).collect()
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width - self.half_width()
    }
}

/// Reference line with exact arc integration.
#[derive(Clone, Debug)]
pub struct Centerline {
    starts: Vec<(f64, Vector2<f64>, f64)>,
    segments: Vec<RoadSegment>,
}

impl Centerline {
    pub fn new(segments: &[RoadSegment]) -> Self {
        let mut starts = Vec::with_capacity(segments.len());
        let (mut s, mut p, mut th) = (0.0, Vector2::zeros(), 0.0);
        for seg in segments {
            starts.push((s, p, th));
            let (np, nth) = advance(p, th, seg.curvature, seg.length);
            s += seg.length;
            p = np;
            th = nth;
        }
        Centerline { starts, segments: segments.to_vec() }
    }

    /// Position, heading and curvature at arclength `s` (clamped to the road).
    pub fn eval(&self, s: f64) -> (Vector2<f64>, f64, f64) {
        let mut i = self.starts.partition_point(|st| st.0 <= s).saturating_sub(1);
        i = i.min(self.segments.len() - 1);
        let (s0, p0, th0) = self.starts[i];
        let k = self.segments[i].curvature;
        let ds = (s - s0).max(0.0);
        let (p, th) = advance(p0, th0, k, ds);
        (p, th, k)
    }

    pub fn offset_point(&self, s: f64, lateral: f64) -> Vector2<f64> {
        let (p, th, _) = self.eval(s);
        p + Vector2::new(-th.sin(), th.cos()) * lateral
    }
}

fn advance(p: Vector2<f64>, th: f64, k: f64, ds: f64) -> (Vector2<f64>, f64) {
    if k.abs() < 1e-12 {
        return (p + Vector2::new(th.cos(), th.sin()) * ds, th);
    }
    let th1 = th + k * ds;
    (p + Vector2::new((th1.sin() - th.sin()) / k, (th.cos() - th1.cos()) / k), th1)
}

#[derive(Clone, Debug)]
pub struct World {
    pub map: HdMap,
    pub trajectory: Vec<Pose>,
    pub timestamps: Vec<f64>,
    pub centerline: Centerline,
}

fn sample_positions(start: f64, end: f64, spacing: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let s = start + i as f64 * spacing;
        if s >= end - 1e-9 {
            break;
        }
        out.push(s);
        i += 1;
    }
    out.push(end);
    out
}

pub fn generate_world(spec: &WorldSpec) -> Result<World, SimError> {
    spec.validate()?;
    let line = Centerline::new(&spec.road);
    let length = spec.road_length();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut landmarks = Vec::new();
    let mut next_id = 1u64;
    let mut push = |class, points: Vec<Vector3<f64>>, out: &mut Vec<Landmark>| -> Result<(), SimError> {
        out.push(Landmark::new(next_id, class, points).map_err(|e| SimError::InvalidSpec(e.to_string()))?);
        next_id += 1;
        Ok(())
    };

    for offset in spec.marking_offsets() {
        let mut c0 = 0.0;
        while c0 < length - 1e-9 {
            let c1 = (c0 + spec.marking_chunk).min(length);
            let pts = sample_positions(c0, c1, spec.vertex_spacing)
                .into_iter()
                .map(|s| {
                    let p = line.offset_point(s, offset);
                    Vector3::new(p.x, p.y, 0.0)
                })
                .collect();
            push(LandmarkClass::LaneMarking, pts, &mut landmarks)?;
            c0 = c1;
        }
    }

    if spec.pole_spacing > 0.0 {
        let side = spec.half_width() + spec.pole_offset;
        let mut s = spec.pole_spacing * 0.5;
        while s < length {
            for lateral in [-side, side] {
                let jitter = if spec.pole_jitter > 0.0 { rng.random_range(-spec.pole_jitter..spec.pole_jitter) } else { 0.0 };
                let p = line.offset_point((s + jitter).clamp(0.0, length), lateral);
                push(
                    LandmarkClass::Pole,
                    vec![Vector3::new(p.x, p.y, 0.0), Vector3::new(p.x, p.y, spec.pole_height)],
                    &mut landmarks,
                )?;
            }
            s += spec.pole_spacing;
        }
    }

    for sb in &spec.signboards {
        let a = line.offset_point(sb.s, sb.lateral - 0.5 * sb.width);
        let b = line.offset_point(sb.s, sb.lateral + 0.5 * sb.width);
        let (z0, z1) = (sb.elevation, sb.elevation + sb.height);
        push(
            LandmarkClass::Signboard,
            vec![
                Vector3::new(a.x, a.y, z0),
                Vector3::new(b.x, b.y, z0),
                Vector3::new(b.x, b.y, z1),
                Vector3::new(a.x, a.y, z1),
            ],
            &mut landmarks,
        )?;
    }

    let map = HdMap::new(landmarks).map_err(|e| SimError::InvalidSpec(e.to_string()))?;

    let base = spec.lane_center(spec.ego_lane);
    let omega = if spec.weave_period > 0.0 { 2.0 * PI / spec.weave_period } else { 0.0 };
    let mut trajectory = Vec::with_capacity(spec.frames);
    let mut timestamps = Vec::with_capacity(spec.frames);
    for k in 0..spec.frames {
        let t = k as f64 / spec.frame_rate;
        let s = spec.start_s + spec.speed * t;
        let lat = base + spec.weave_amplitude * (omega * s).sin();
        let dlat = spec.weave_amplitude * omega * (omega * s).cos();
        let (p, th, kappa) = line.eval(s);
        let pos = p + Vector2::new(-th.sin(), th.cos()) * lat;
        let heading = th + dlat.atan2(1.0 - kappa * lat);
        trajectory.push(Pose::from_xyz_yaw(pos.x, pos.y, 0.0, heading));
        timestamps.push(t);
    }
    Ok(World { map, trajectory, timestamps, centerline: line })
}
