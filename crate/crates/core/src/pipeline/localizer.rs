//! The per-frame localization loop: initialize from GPS, track against the
//! cost maps, fuse in the sliding window, fall back to odometry when lost.

use std::time::Instant;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::costmap::{CostMapConfig, SegMask};
use crate::geometry::{CameraModel, Pose};
use crate::hdmap::{crop_local_map_ahead, HdMap, SampledPoint};
use crate::initializer::{
    build_frame_costmaps, coarse_pose_from_gps, grid_search_refine, snap_yaw_to_lane, subsample_points, FrameInputs,
    GridSpec,
};
use crate::posegraph::{FrameOutcome, GraphConfig, LocalizationState, SlidingWindow, StateMachine, WindowFrame};
use crate::sim::{FrameSensors, SimError};
use crate::tracker::{
    align_photometric, detect_longitudinal_constraint, longitudinal_correction, predict_pose, select_dof_mode, DofMode,
    DofPolicy, LongitudinalConstraint, TrackerConfig,
};

use super::PipelineError;

/// How the local map is queried and how initialization is seeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryConfig {
    /// Radius of the local map disc, meters.
    pub range: f64,
    /// Centre of the disc this far ahead of the vehicle.
    pub ahead: f64,
    /// Landmark sampling interval, meters.
    pub interval: f64,
    /// Cap on samples used for tracking (0 keeps all).
    pub max_points: usize,
    /// Cap on samples used by the grid search.
    pub init_max_points: usize,
    /// Radius of the road-height lookup around a GPS fix.
    pub z_radius: f64,
    pub min_gps_separation: f64,
    /// Replace the two-fix heading by the nearest lane direction.
    pub snap_yaw: bool,
    /// A frame is occluded when its occupied mask pixels number fewer than
    /// this share of the map samples expected in view.
    pub occlusion_ratio: f64,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            range: 80.0,
            ahead: 30.0,
            interval: 0.5,
            max_points: 0,
            init_max_points: 300,
            z_radius: 10.0,
            min_gps_separation: 10.0,
            snap_yaw: true,
            occlusion_ratio: 0.01,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub query: QueryConfig,
    pub grid: GridSpec,
    pub tracker: TrackerConfig,
    pub graph: GraphConfig,
    pub costmap: CostMapConfig,
    /// Frames allowed without a first successful initialization (0 means
    /// unlimited).
    pub init_budget: usize,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |m: String| PipelineError::Config(m);
        self.tracker.validate().map_err(cfg)?;
        self.graph.validate().map_err(cfg)?;
        self.grid.validate().map_err(|e| cfg(e.to_string()))?;
        let q = &self.query;
        if !(q.range > 0.0 && q.interval > 0.0 && q.z_radius > 0.0 && q.min_gps_separation >= 0.0 && q.occlusion_ratio >= 0.0) {
            return Err(cfg("query distances must be positive".into()));
        }
        if self.costmap.morphology.ramp_width == 0 || !(self.costmap.truncation > 0.0) {
            return Err(cfg("cost-map ramp and truncation must be positive".into()));
        }
        Ok(())
    }
}

/// Wall-clock milliseconds spent per stage on one frame. Mask production
/// is not included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    /// Cost-map construction from the masks.
    pub post_processing: f64,
    /// Local map crop.
    pub query: f64,
    /// Alignment and window optimization.
    pub optimization: f64,
    /// Initialization grid search.
    pub search: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.post_processing + self.query + self.optimization + self.search
    }
}

/// Where an emitted pose came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseSource {
    Initialization,
    Tracking,
    /// Previous pose propagated by odometry.
    Backup,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub frame: usize,
    pub timestamp: f64,
    /// State the frame was processed in.
    pub state: LocalizationState,
    /// State after the frame.
    pub next_state: LocalizationState,
    /// `None` until the first initialization.
    pub pose: Option<Pose>,
    pub source: Option<PoseSource>,
    pub confidence: f64,
    pub success: bool,
    pub occluded: bool,
    pub out_of_domain: bool,
    pub dof_mode: Option<DofMode>,
    pub lm_iterations: usize,
    /// Window objective after each accepted step.
    pub graph_history: Vec<f64>,
    pub timings: StageTimings,
}

/// Incremental localizer over a map and a camera rig.
pub struct Localizer<'a> {
    map: &'a HdMap,
    cameras: &'a [CameraModel],
    cfg: &'a PipelineConfig,
    machine: StateMachine,
    window: SlidingWindow,
    last_pose: Option<Pose>,
    gps_fixes: Vec<Vector2<f64>>,
    initialized_once: bool,
    frames_waiting: usize,
}

const GPS_BUFFER: usize = 64;

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl<'a> Localizer<'a> {
    pub fn new(map: &'a HdMap, cameras: &'a [CameraModel], cfg: &'a PipelineConfig) -> Self {
        Localizer {
            map,
            cameras,
            cfg,
            machine: StateMachine::default(),
            window: SlidingWindow::new(),
            last_pose: None,
            gps_fixes: Vec::new(),
            initialized_once: false,
            frames_waiting: 0,
        }
    }

    pub fn state(&self) -> LocalizationState {
        self.machine.state
    }

    /// Processes frame `k`. `masks` is called at most once, only when the
    /// frame's images are needed.
    pub fn process(
        &mut self,
        k: usize,
        sensors: &FrameSensors,
        masks: impl FnOnce() -> Result<Vec<[SegMask; 3]>, SimError>,
    ) -> Result<FrameReport, PipelineError> {
        let state = self.machine.state;
        let backup = self.last_pose.map(|p| predict_pose(&p, &sensors.odometry));
        let mut report = FrameReport {
            frame: k,
            timestamp: sensors.timestamp,
            state,
            next_state: state,
            pose: backup,
            source: backup.map(|_| PoseSource::Backup),
            confidence: 0.0,
            success: false,
            occluded: false,
            out_of_domain: false,
            dof_mode: None,
            lm_iterations: 0,
            graph_history: Vec::new(),
            timings: StageTimings::default(),
        };
        match state {
            LocalizationState::Lost => {
                self.buffer_fix(sensors);
                self.machine.step(FrameOutcome::Skipped, &self.cfg.graph);
            }
            LocalizationState::Initializing => self.initialize(k, sensors, masks, &mut report)?,
            LocalizationState::Tracking => self.track(k, sensors, masks, &mut report)?,
        }
        report.next_state = self.machine.state;
        self.last_pose = report.pose;
        Ok(report)
    }

    fn initialize(
        &mut self,
        k: usize,
        sensors: &FrameSensors,
        masks: impl FnOnce() -> Result<Vec<[SegMask; 3]>, SimError>,
        report: &mut FrameReport,
    ) -> Result<(), PipelineError> {
        let q = &self.cfg.query;
        let mut success = false;
        if sensors.gps.valid {
            let fix_b = sensors.gps.position;
            let fix_a = self.gps_fixes.iter().rev().find(|a| (fix_b - **a).norm() >= q.min_gps_separation).copied();
            self.buffer_fix(sensors);
            if let Some(fix_a) = fix_a {
                if let Some(pose) = self.attempt_initialization(&fix_a, &fix_b, masks, report)? {
                    self.window.clear();
                    self.window.add_frame(WindowFrame::new(k as u64, pose, true, report.confidence), &Pose::identity(), &self.cfg.graph)?;
                    report.pose = Some(pose);
                    report.source = Some(PoseSource::Initialization);
                    success = true;
                }
            }
        }
        report.success = success;
        self.machine.step(FrameOutcome::Initialization { success }, &self.cfg.graph);
        if success {
            self.initialized_once = true;
        } else if !self.initialized_once {
            self.frames_waiting += 1;
            if self.cfg.init_budget > 0 && self.frames_waiting >= self.cfg.init_budget {
                return Err(PipelineError::InitializationFailed { frames: self.frames_waiting });
            }
        }
        Ok(())
    }

    fn attempt_initialization(
        &self,
        fix_a: &Vector2<f64>,
        fix_b: &Vector2<f64>,
        masks: impl FnOnce() -> Result<Vec<[SegMask; 3]>, SimError>,
        report: &mut FrameReport,
    ) -> Result<Option<Pose>, PipelineError> {
        let q = &self.cfg.query;
        let Ok(mut coarse) = coarse_pose_from_gps(fix_a, fix_b, self.map, q.min_gps_separation, q.z_radius) else {
            return Ok(None);
        };
        if q.snap_yaw {
            let yaw = snap_yaw_to_lane(self.map, fix_b, coarse.yaw(), q.z_radius);
            coarse = Pose::from_xyz_yaw(coarse.translation.x, coarse.translation.y, coarse.translation.z, yaw);
        }
        let t = Instant::now();
        let points = crop_local_map_ahead(self.map, &coarse, q.range, q.interval, q.ahead);
        let sparse = subsample_points(&points, q.init_max_points);
        report.timings.query = ms(t);
        if points.is_empty() {
            return Ok(None);
        }
        let masks = masks()?;
        let t = Instant::now();
        let costmaps = build_frame_costmaps(&masks, &self.cfg.costmap);
        report.timings.post_processing = ms(t);
        let inputs = FrameInputs::new(self.cameras, &costmaps, &sparse);
        let t = Instant::now();
        let found = grid_search_refine(&coarse, &self.cfg.grid, &inputs);
        report.timings.search = ms(t);
        let Ok(found) = found else {
            return Ok(None);
        };
        let t = Instant::now();
        let points = subsample_points(&points, q.max_points);
        let inputs = inputs.with_points(&points);
        let mode = self.dof_mode(&points, &found.pose).0;
        let result = align_photometric(&found.pose, &inputs, mode, &self.cfg.tracker);
        report.timings.optimization = ms(t);
        let Ok(result) = result else {
            return Ok(None);
        };
        report.confidence = result.confidence;
        report.dof_mode = Some(mode);
        report.lm_iterations = result.iterations;
        Ok(result.success.then_some(result.pose))
    }

    fn dof_mode(&self, points: &[SampledPoint], pose: &Pose) -> (DofMode, LongitudinalConstraint) {
        let constraint = detect_longitudinal_constraint(points, pose, self.cameras, &self.cfg.tracker);
        let mode = match self.cfg.tracker.dof_policy {
            DofPolicy::Auto => select_dof_mode(constraint),
            DofPolicy::Full6 => DofMode::Full6,
            DofPolicy::Decoupled => DofMode::Decoupled,
        };
        (mode, constraint)
    }

    fn track(
        &mut self,
        k: usize,
        sensors: &FrameSensors,
        masks: impl FnOnce() -> Result<Vec<[SegMask; 3]>, SimError>,
        report: &mut FrameReport,
    ) -> Result<(), PipelineError> {
        self.buffer_fix(sensors);
        let q = &self.cfg.query;
        let mut pred = report.pose.expect("tracking always follows a pose");
        let t = Instant::now();
        let points = subsample_points(&crop_local_map_ahead(self.map, &pred, q.range, q.interval, q.ahead), q.max_points);
        report.timings.query = ms(t);
        if points.is_empty() {
            report.out_of_domain = true;
            self.lose();
            self.machine.step(FrameOutcome::Tracking { success: false, occluded: false, out_of_domain: true }, &self.cfg.graph);
            return Ok(());
        }
        let masks = masks()?;
        let t = Instant::now();
        let costmaps = build_frame_costmaps(&masks, &self.cfg.costmap);
        report.timings.post_processing = ms(t);

        let expected = expected_projections(self.cameras, &points, &pred);
        let occupied: usize = masks.iter().flatten().map(SegMask::occupied).sum();
        report.occluded = expected > 0 && (occupied as f64) < q.occlusion_ratio * expected as f64;

        let t = Instant::now();
        let mut success = false;
        let mut prior = (pred, false, 0.0);
        if !report.occluded {
            let (mode, constraint) = self.dof_mode(&points, &pred);
            if constraint == LongitudinalConstraint::Unconstrained && self.cfg.tracker.longitudinal_correction {
                pred = longitudinal_correction(&pred, &sensors.gps.position, sensors.gps.valid);
            }
            report.dof_mode = Some(mode);
            let inputs = FrameInputs::new(self.cameras, &costmaps, &points);
            if let Ok(result) = align_photometric(&pred, &inputs, mode, &self.cfg.tracker) {
                report.confidence = result.confidence;
                report.lm_iterations = result.iterations;
                success = result.success;
                prior = if success { (result.pose, true, result.confidence) } else { (pred, false, 0.0) };
            }
        }
        self.window.add_frame(WindowFrame::new(k as u64, prior.0, prior.1, prior.2), &sensors.odometry, &self.cfg.graph)?;
        let mut pose = prior.0;
        if self.window.frames().iter().any(|f| f.prior_valid) && !report.occluded {
            match self.window.optimize(&self.cfg.graph) {
                Ok(r) => {
                    report.graph_history = r.history;
                    pose = self.window.newest().expect("frame just added").optimized_pose;
                }
                Err(_) => success = false,
            }
        }
        report.timings.optimization = ms(t);
        report.success = success;
        let outcome = FrameOutcome::Tracking { success, occluded: report.occluded, out_of_domain: false };
        if self.machine.step(outcome, &self.cfg.graph) == LocalizationState::Lost {
            self.lose();
        } else {
            report.pose = Some(pose);
            report.source = Some(if success { PoseSource::Tracking } else { PoseSource::Backup });
        }
        Ok(())
    }

    fn lose(&mut self) {
        self.window.clear();
    }

    fn buffer_fix(&mut self, sensors: &FrameSensors) {
        if sensors.gps.valid {
            self.gps_fixes.push(sensors.gps.position);
            if self.gps_fixes.len() > GPS_BUFFER {
                self.gps_fixes.remove(0);
            }
        }
    }
}

/// Number of (sample, camera) pairs that project into an image.
fn expected_projections(cameras: &[CameraModel], points: &[SampledPoint], pose: &Pose) -> usize {
    let to_cam: Vec<Pose> = cameras.iter().map(|c| c.extrinsic_cb().compose(&pose.inverse())).collect();
    points
        .iter()
        .map(|p| {
            cameras
                .iter()
                .zip(&to_cam)
                .filter(|(cam, t)| cam.project(&t.transform_point(&p.position)).is_ok_and(|u| cam.contains(&u)))
                .count()
        })
        .sum()
}
