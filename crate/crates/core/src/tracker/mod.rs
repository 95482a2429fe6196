//! Frame-to-map tracking: odometry prediction, optional GPS correction of
//! the longitudinal position, two-pass robust alignment against the cost
//! maps and a final roll search.

mod lm;

use nalgebra::{Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::geometry::{EulerPose, Pose};
use crate::hdmap::{LandmarkClass, SampledPoint};
use crate::initializer::{evaluate_pose_cost, FrameInputs};

use lm::{Kernel, LmSettings, Problem, State};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackError {
    #[error("no map sample projects into any camera")]
    NoVisiblePoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofMode {
    Full6,
    Decoupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DofPolicy {
    /// Choose per frame from the visible map content.
    #[default]
    Auto,
    Full6,
    Decoupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LongitudinalConstraint {
    Constrained,
    Unconstrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub huber_delta: f64,
    pub outlier_cutoff: f64,
    pub max_lm_iterations: usize,
    pub initial_lambda: f64,
    pub dof_policy: DofPolicy,
    /// Visible pole/signboard samples needed to call the scene constrained.
    pub min_vertical_samples: usize,
    /// Largest direction spread (rad) of lane tangents still called parallel.
    pub parallel_threshold: f64,
    /// Largest lane curvature (1/m) still called straight.
    pub curvature_threshold: f64,
    pub rotation_range: f64,
    pub rotation_step: f64,
    pub confidence_success: f64,
    /// Share of visible observations that must survive outlier removal.
    pub min_inlier_fraction: f64,
    pub longitudinal_correction: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            huber_delta: 0.3,
            outlier_cutoff: 0.7,
            max_lm_iterations: 30,
            initial_lambda: 1e-3,
            dof_policy: DofPolicy::Auto,
            min_vertical_samples: 3,
            parallel_threshold: 2f64.to_radians(),
            curvature_threshold: 1.0 / 2000.0,
            rotation_range: 2f64.to_radians(),
            rotation_step: 0.5f64.to_radians(),
            confidence_success: 0.8,
            min_inlier_fraction: 0.3,
            longitudinal_correction: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.huber_delta,
            self.outlier_cutoff,
            self.initial_lambda,
            self.parallel_threshold,
            self.curvature_threshold,
            self.rotation_range,
            self.rotation_step,
            self.confidence_success,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_lm_iterations == 0 {
            return Err("tracker thresholds must be positive".into());
        }
        if self.rotation_step > self.rotation_range + 1e-12 {
            return Err("rotation step exceeds its range".into());
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err("min_inlier_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackResult {
    pub pose: Pose,
    pub confidence: f64,
    pub inlier_count: usize,
    /// Visible observations at the end of the robust pass.
    pub visible_count: usize,
    pub converged: bool,
    pub dof_mode: DofMode,
    /// LM iterations over all stages and passes.
    pub iterations: usize,
    /// Objective trace of every LM run, initial value first.
    pub objective_history: Vec<Vec<f64>>,
    /// Summed optimizer steps: heading-frame translation then roll, pitch,
    /// yaw for the decoupled mode, the tangent sum for the full mode.
    pub parameter_delta: Vector6<f64>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub success: bool,
}

/// `T_wb^{k+1} = T_wb^k * T_b^{k->k+1}`.
pub fn predict_pose(prev: &Pose, odom: &Pose) -> Pose {
    prev.compose(odom)
}

/// Decides whether the visible map content pins down the longitudinal
/// position. Lanes alone leave it free when they are parallel and straight.
pub fn detect_longitudinal_constraint(
    points: &[SampledPoint],
    pose: &Pose,
    cameras: &[crate::geometry::CameraModel],
    cfg: &TrackerConfig,
) -> LongitudinalConstraint {
    let visible = visible_mask(points, pose, cameras);
    let vertical = points.iter().zip(&visible).filter(|(p, v)| **v && p.class.is_vertical()).count();
    if vertical >= cfg.min_vertical_samples {
        return LongitudinalConstraint::Constrained;
    }
    let mut directions = Vec::new();
    let mut max_curvature: f64 = 0.0;
    let lanes: Vec<(&SampledPoint, bool)> =
        points.iter().zip(visible.iter().copied()).filter(|(p, _)| p.class == LandmarkClass::LaneMarking).collect();
    for run in lanes.chunk_by(|a, b| a.0.source_id == b.0.source_id) {
        let pts: Vec<Vector2<f64>> = run.iter().filter(|(_, v)| *v).map(|(p, _)| p.position.xy()).collect();
        let headings: Vec<(f64, f64)> = pts
            .windows(2)
            .filter_map(|w| {
                let d = w[1] - w[0];
                (d.norm() > 1e-6).then(|| (d.y.atan2(d.x), d.norm()))
            })
            .collect();
        for w in headings.windows(2) {
            let turn = crate::initializer::wrap_angle(w[1].0 - w[0].0).abs();
            max_curvature = max_curvature.max(turn / (0.5 * (w[0].1 + w[1].1)));
        }
        directions.extend(headings.iter().map(|h| h.0));
    }
    let reference = directions.first().copied().unwrap_or(0.0);
    let spread = directions
        .iter()
        .map(|d| {
            // Lines are undirected, so compare modulo pi.
            let a = crate::initializer::wrap_angle(2.0 * (d - reference)) / 2.0;
            a.abs()
        })
        .fold(0.0, f64::max);
    if 2.0 * spread <= cfg.parallel_threshold && max_curvature <= cfg.curvature_threshold {
        LongitudinalConstraint::Unconstrained
    } else {
        LongitudinalConstraint::Constrained
    }
}

fn visible_mask(points: &[SampledPoint], pose: &Pose, cameras: &[crate::geometry::CameraModel]) -> Vec<bool> {
    let to_cam: Vec<Pose> = cameras.iter().map(|c| c.extrinsic_cb().compose(&pose.inverse())).collect();
    points
        .iter()
        .map(|p| {
            cameras.iter().zip(&to_cam).any(|(cam, t)| {
                let p_c = t.transform_point(&p.position);
                cam.project(&p_c).is_ok_and(|u| cam.contains(&u))
            })
        })
        .collect()
}

/// Moves the pose along its forward axis by the forward component of the
/// GPS innovation; lateral position and attitude are untouched.
pub fn longitudinal_correction(pose: &Pose, gps: &Vector2<f64>, valid: bool) -> Pose {
    if !valid {
        return *pose;
    }
    let fwd3 = pose.rotation * Vector3::x();
    let fwd = fwd3.xy();
    if fwd.norm() < 1e-9 {
        return *pose;
    }
    let fwd = fwd.normalize();
    let along = (gps - pose.translation.xy()).dot(&fwd);
    let mut out = *pose;
    out.translation.x += along * fwd.x;
    out.translation.y += along * fwd.y;
    out
}

pub fn select_dof_mode(constraint: LongitudinalConstraint) -> DofMode {
    match constraint {
        LongitudinalConstraint::Constrained => DofMode::Full6,
        LongitudinalConstraint::Unconstrained => DofMode::Decoupled,
    }
}

/// Parameter sets of the decoupled stages, over `(tx, ty, tz, roll, pitch,
/// yaw)`: first pitch, yaw and lateral position, then pitch and height.
pub const DECOUPLED_STAGES: [[bool; 6]; 2] =
    [[false, true, false, false, true, true], [false, false, true, false, true, false]];

const FULL_STAGE: [[bool; 6]; 1] = [[true; 6]];

/// Mean cost-map value at the projections of the selected observations;
/// zero when nothing is selected or visible.
pub fn compute_confidence(pose: &Pose, inputs: &FrameInputs, inliers: Option<&[bool]>) -> f64 {
    let n_cams = inputs.cameras.len();
    let mut sum = 0.0;
    let mut n = 0usize;
    inputs.for_each_visible(pose, |pi, ci, _, u, map| {
        if inliers.is_none_or(|m| m[pi * n_cams + ci]) {
            sum += map.sample_unchecked(u.x, u.y).0;
            n += 1;
        }
    });
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Two-pass alignment: robust pass with the Huber kernel, outlier removal,
/// then a plain least-squares pass on the survivors. The decoupled mode
/// ends with the roll search.
pub fn align_photometric(
    pred: &Pose,
    inputs: &FrameInputs,
    mode: DofMode,
    cfg: &TrackerConfig,
) -> Result<TrackResult, TrackError> {
    let initial_cost = evaluate_pose_cost(pred, inputs).map_err(|_| TrackError::NoVisiblePoints)?.mean_cost;
    let settings = LmSettings { max_iterations: cfg.max_lm_iterations, initial_lambda: cfg.initial_lambda };
    let stages: &[[bool; 6]] = match mode {
        DofMode::Full6 => &FULL_STAGE,
        DofMode::Decoupled => &DECOUPLED_STAGES,
    };
    let mut state = match mode {
        DofMode::Full6 => State::Se3(*pred),
        DofMode::Decoupled => State::euler(pred),
    };
    let mut converged = true;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut delta = Vector6::zeros();
    let mut run = |state: &mut State, kernel, inliers: Option<&[bool]>| {
        for active in stages {
            let problem = Problem { inputs: *inputs, kernel, inliers, active: *active };
            match problem.solve(state, &settings) {
                Some(out) => {
                    converged &= out.converged;
                    iterations += out.iterations;
                    delta += out.delta;
                    history.push(out.history);
                }
                None => converged = false,
            }
        }
    };

    run(&mut state, Kernel::Huber(cfg.huber_delta), None);

    let n_cams = inputs.cameras.len();
    let mut inliers = vec![false; inputs.points.len() * n_cams];
    let mut visible_count = 0;
    inputs.for_each_visible(&state.pose(), |pi, ci, _, u, map| {
        visible_count += 1;
        let r = map.sample_unchecked(u.x, u.y).0 - 1.0;
        inliers[pi * n_cams + ci] = r.abs() <= cfg.outlier_cutoff;
    });
    let inlier_total = inliers.iter().filter(|&&b| b).count();
    if inlier_total > 0 {
        run(&mut state, Kernel::Quadratic, Some(&inliers));
    } else {
        converged = false;
    }

    if mode == DofMode::Decoupled {
        if let State::Euler { pose, heading } = state {
            let (refined, _) = rotation_brute_refine(&pose, inputs, cfg);
            state = State::Euler { pose: refined, heading };
        }
    }
    let pose = state.pose();
    let mut inlier_count = 0;
    inputs.for_each_visible(&pose, |pi, ci, _, _, _| inlier_count += inliers[pi * n_cams + ci] as usize);
    let confidence = compute_confidence(&pose, inputs, Some(&inliers));
    let final_cost = evaluate_pose_cost(&pose, inputs).map(|e| e.mean_cost).unwrap_or(1.0);
    let inlier_fraction = if visible_count > 0 { inlier_total as f64 / visible_count as f64 } else { 0.0 };
    let success = converged
        && inlier_count > 0
        && confidence >= cfg.confidence_success
        && inlier_fraction >= cfg.min_inlier_fraction;
    Ok(TrackResult {
        pose,
        confidence,
        inlier_count,
        visible_count,
        converged,
        dof_mode: mode,
        iterations,
        objective_history: history,
        parameter_delta: delta,
        initial_cost,
        final_cost,
        success,
    })
}

/// Tries roll offsets `-range..=range` in `step` increments and keeps the
/// cheapest; ties go to the smaller offset, so an already optimal pose is
/// returned unchanged. Returns the pose and the number of candidates.
pub fn rotation_brute_refine(pose: &EulerPose, inputs: &FrameInputs, cfg: &TrackerConfig) -> (EulerPose, usize) {
    let n = (cfg.rotation_range / cfg.rotation_step + 1e-9).floor() as i64;
    let mut best: Option<(f64, i64)> = None;
    let mut evaluated = 0;
    // Zero first, then +-1, +-2, ... so ties keep the smallest offset.
    let order = std::iter::once(0).chain((1..=n).flat_map(|k| [-k, k]));
    for k in order {
        let mut cand = *pose;
        cand.roll += k as f64 * cfg.rotation_step;
        evaluated += 1;
        if let Ok(e) = evaluate_pose_cost(&cand.to_pose(), inputs) {
            if best.is_none_or(|(c, _)| e.mean_cost < c) {
                best = Some((e.mean_cost, k));
            }
        }
    }
    let mut out = *pose;
    if let Some((_, k)) = best {
        if k != 0 {
            out.roll += k as f64 * cfg.rotation_step;
        }
    }
    (out, evaluated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmap::{CostMap, CostMapConfig};
    use crate::geometry::{CameraModel, Tangent};
    use crate::hdmap::{crop_local_map_ahead, HdMap, Landmark};
    use crate::initializer::{build_frame_costmaps, FrameCostMaps};
    use crate::sim::{front_camera, generate_world, render_masks, RenderParams, World, WorldSpec};
    use nalgebra::Matrix4;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn world() -> &'static World {
        static W: OnceLock<World> = OnceLock::new();
        W.get_or_init(|| generate_world(&WorldSpec::highway(120)).unwrap())
    }

    /// Cost maps rendered at `truth` and map samples around `truth`.
    fn frame(truth: &Pose) -> (Vec<CameraModel>, FrameCostMaps, Vec<SampledPoint>) {
        let cams = vec![front_camera()];
        let masks = vec![render_masks(&world().map, &cams[0], truth, &RenderParams::default())];
        let maps = build_frame_costmaps(&masks, &CostMapConfig::default());
        let pts = crop_local_map_ahead(&world().map, truth, 80.0, 0.5, 30.0);
        (cams, maps, pts)
    }

    fn matrix(p: &Pose) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(p.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&p.translation);
        m
    }

    #[test]
    fn prediction_composes_on_the_right() {
        assert_eq!(predict_pose(&Pose::identity(), &Pose::identity()), Pose::identity());
        let p = predict_pose(&Pose::from_xyz_yaw(0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2), &Pose::from_translation(1.0, 0.0, 0.0));
        assert!((p.translation - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pose = Pose::identity();
        let mut dense = Matrix4::identity();
        for _ in 0..100 {
            let v = Vector6::from_fn(|_, _| rng.random_range(-0.3..0.3));
            let inc = Pose::exp(&Tangent(v));
            pose = predict_pose(&pose, &inc);
            dense *= matrix(&inc);
        }
        assert!((matrix(&pose) - dense).amax() < 1e-9);
    }

    #[test]
    fn correction_moves_along_heading_only() {
        let pose = Pose::from_xyz_yaw(10.0, 4.0, 1.0, 0.0);
        assert_eq!(longitudinal_correction(&pose, &Vector2::new(10.0, 4.0), true), pose);
        let c = longitudinal_correction(&pose, &Vector2::new(15.0, 7.0), true);
        assert_eq!(c.translation, Vector3::new(15.0, 4.0, 1.0));
        assert_eq!(c.rotation, pose.rotation);
        assert_eq!(longitudinal_correction(&pose, &Vector2::new(15.0, 7.0), false), pose);
    }

    proptest! {
        #[test]
        fn correction_has_no_lateral_component(yaw in -3.2..3.2f64, gx in -20.0..20.0f64, gy in -20.0..20.0f64) {
            let pose = Pose::from_xyz_yaw(1.0, 2.0, 0.5, yaw);
            let c = longitudinal_correction(&pose, &Vector2::new(gx, gy), true);
            let local = pose.inverse_transform_point(&c.translation);
            prop_assert!(local.y.abs() < 1e-12 && local.z.abs() < 1e-12);
            prop_assert_eq!(c.rotation, pose.rotation);
        }
    }

    fn lane(id: u64, pts: Vec<Vector3<f64>>) -> Landmark {
        Landmark::new(id, LandmarkClass::LaneMarking, pts).unwrap()
    }

    fn constraint_of(map: &HdMap, cfg: &TrackerConfig) -> LongitudinalConstraint {
        let pts = crop_local_map_ahead(map, &Pose::identity(), 80.0, 0.5, 30.0);
        detect_longitudinal_constraint(&pts, &Pose::identity(), &[front_camera()], cfg)
    }

    #[test]
    fn constraint_detection() {
        let cfg = TrackerConfig::default();
        let straight: Vec<Landmark> = [-1.75, 1.75, 5.25]
            .iter()
            .enumerate()
            .map(|(i, &y)| lane(i as u64 + 1, (0..=10).map(|k| Vector3::new(10.0 * k as f64, y, 0.0)).collect()))
            .collect();
        assert_eq!(constraint_of(&HdMap::new(straight.clone()).unwrap(), &cfg), LongitudinalConstraint::Unconstrained);

        let mut with_pole = straight;
        with_pole.push(
            Landmark::new(9, LandmarkClass::Pole, vec![Vector3::new(40.0, -5.0, 0.0), Vector3::new(40.0, -5.0, 6.0)]).unwrap(),
        );
        assert_eq!(constraint_of(&HdMap::new(with_pole).unwrap(), &cfg), LongitudinalConstraint::Constrained);

        // Arcs of radius 200 m around a centre to the left of the vehicle.
        let r = 200.0;
        let arcs: Vec<Landmark> = [r + 1.75, r - 1.75]
            .iter()
            .enumerate()
            .map(|(i, &rad)| {
                lane(
                    i as u64 + 1,
                    (0..=100).map(|k| {
                        let a = k as f64 * 0.005;
                        Vector3::new(rad * a.sin(), r - rad * a.cos(), 0.0)
                    })
                    .collect(),
                )
            })
            .collect();
        let loose = TrackerConfig { curvature_threshold: 1.0 / 500.0, parallel_threshold: 1.0, ..TrackerConfig::default() };
        assert_eq!(constraint_of(&HdMap::new(arcs).unwrap(), &loose), LongitudinalConstraint::Constrained);
    }

    #[test]
    fn mode_selection() {
        assert_eq!(select_dof_mode(LongitudinalConstraint::Constrained), DofMode::Full6);
        assert_eq!(select_dof_mode(LongitudinalConstraint::Unconstrained), DofMode::Decoupled);
        let sets: Vec<Vec<usize>> =
            DECOUPLED_STAGES.iter().map(|s| (0..6).filter(|&k| s[k]).collect()).collect();
        // (ty, pitch, yaw) then (tz, pitch).
        assert_eq!(sets, vec![vec![1, 4, 5], vec![2, 4]]);
    }

    /// Cost maps with a unit peak exactly on every ground-truth projection.
    fn peaked_frame(truth: &Pose) -> (Vec<CameraModel>, FrameCostMaps, Vec<SampledPoint>) {
        let cam = front_camera();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let to_world = truth.compose(&cam.extrinsic_bc);
        let mut pts = Vec::new();
        let mut peaks: [Vec<(f64, f64)>; 3] = Default::default();
        for i in 0..120 {
            let (u, v) = (rng.random_range(20..620) as f64, rng.random_range(20..340) as f64);
            let depth = rng.random_range(8.0..50.0);
            let p_c = Vector3::new((u - cam.cx) / cam.fx * depth, (v - cam.cy) / cam.fy * depth, depth);
            let class = LandmarkClass::ALL[i % 3];
            peaks[class.index()].push((u, v));
            pts.push(SampledPoint { position: to_world.transform_point(&p_c), class, source_id: i as u64, arclength: 0.0 });
        }
        let maps = LandmarkClass::ALL.map(|c| {
            let data = (0..640 * 360)
                .map(|i| {
                    let (x, y) = ((i % 640) as f64, (i / 640) as f64);
                    peaks[c.index()].iter().map(|(u, v)| (-((x - u).powi(2) + (y - v).powi(2)) / 32.0).exp()).fold(0.0, f64::max) as f32
                })
                .collect();
            CostMap { width: 640, height: 360, class: c, data }
        });
        (vec![cam], vec![Some(maps)], pts)
    }

    #[test]
    fn prediction_at_optimum_stays_put() {
        let gt = world().trajectory[60];
        let (cams, maps, pts) = peaked_frame(&gt);
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        for mode in [DofMode::Full6, DofMode::Decoupled] {
            let r = align_photometric(&gt, &inputs, mode, &TrackerConfig::default()).unwrap();
            assert!(r.converged && r.success);
            assert!(r.objective_history.iter().all(|h| h.len() <= 3), "{:?}", r.objective_history);
            let d = gt.inverse().compose(&r.pose);
            assert!(d.translation.norm() < 1e-3 && d.angle() < 1e-4, "{d:?}");
        }
    }

    #[test]
    fn rendered_truth_stays_within_rasterization() {
        let gt = world().trajectory[60];
        let (cams, maps, pts) = frame(&gt);
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        let r = align_photometric(&gt, &inputs, DofMode::Full6, &TrackerConfig::default()).unwrap();
        assert!(r.converged && r.success && r.confidence > 0.95);
        assert!(r.final_cost <= r.initial_cost);
        let d = gt.inverse().compose(&r.pose);
        assert!(d.translation.norm() < 0.05 && d.angle().to_degrees() < 0.3, "{d:?}");
    }

    #[test]
    fn recovers_from_lateral_and_yaw_offset() {
        // Frame 60 sees the first signboard and several poles.
        let gt = world().trajectory[60];
        let (cams, maps, pts) = frame(&gt);
        assert!(pts.iter().any(|p| p.class == LandmarkClass::Signboard) && pts.iter().any(|p| p.class == LandmarkClass::Pole));
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        let cfg = TrackerConfig::default();
        let pred = gt.compose(&Pose::from_xyz_yaw(0.0, 0.5, 0.0, 1f64.to_radians()));
        let r = align_photometric(&pred, &inputs, DofMode::Full6, &cfg).unwrap();
        let d = gt.inverse().compose(&r.pose);
        let e = EulerPose::from_pose(&d);
        assert!(d.translation.y.abs() < 0.05 && d.translation.z.abs() < 0.05, "{d:?}");
        for a in [e.roll, e.pitch, e.yaw] {
            assert!(a.to_degrees().abs() < 0.1, "{e:?}");
        }
        assert!(r.objective_history.iter().all(|h| h.windows(2).all(|w| w[1] <= w[0])));

        let pred = gt.compose(&Pose::from_translation(0.0, 1.0, 0.0));
        let r = align_photometric(&pred, &inputs, DofMode::Full6, &cfg).unwrap();
        assert!(r.final_cost < 0.05 && r.final_cost <= r.initial_cost, "{} -> {}", r.initial_cost, r.final_cost);
    }

    #[test]
    fn decoupled_mode_never_moves_roll_or_longitudinal() {
        let gt = world().trajectory[10];
        let (cams, maps, pts) = frame(&gt);
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        let pred = gt.compose(&Pose::from_xyz_yaw(0.0, 0.4, 0.05, 0.5f64.to_radians()));
        let cfg = TrackerConfig { rotation_range: 0.5f64.to_radians(), ..TrackerConfig::default() };
        let r = align_photometric(&pred, &inputs, DofMode::Decoupled, &cfg).unwrap();
        assert_eq!(r.parameter_delta[0], 0.0);
        assert_eq!(r.parameter_delta[3], 0.0);
        let (e_in, e_out) = (EulerPose::from_pose(&pred), EulerPose::from_pose(&r.pose));
        let heading = crate::geometry::yaw_matrix(e_in.yaw);
        let moved = heading.transpose() * (e_out.translation() - e_in.translation());
        assert!(moved.x.abs() < 1e-12, "{}", moved.x);
        assert!((r.pose.inverse().compose(&gt)).translation.y.abs() < 0.05);
    }

    #[test]
    fn roll_search() {
        let cfg = TrackerConfig::default();
        let truth = EulerPose::from_pose(&world().trajectory[60]);
        let mut rolled = truth;
        rolled.roll = 1f64.to_radians();
        let (cams, maps, pts) = frame(&rolled.to_pose());
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        let (out, n) = rotation_brute_refine(&truth, &inputs, &cfg);
        assert_eq!(n, 9);
        assert!((out.roll - rolled.roll).abs() <= 0.5f64.to_radians() + 1e-12, "{}", out.roll.to_degrees());

        let (out, _) = rotation_brute_refine(&rolled, &inputs, &cfg);
        assert_eq!(out, rolled);
    }

    #[test]
    fn confidence_values() {
        let gt = world().trajectory[60];
        let (cams, maps, pts) = frame(&gt);
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        assert!(compute_confidence(&gt, &inputs, None) > 0.95);
        let none = vec![false; pts.len()];
        assert_eq!(compute_confidence(&gt, &inputs, Some(&none)), 0.0);
        let zeros = vec![Some(LandmarkClass::ALL.map(|c| CostMap::constant(640, 360, c, 0.0)))];
        let blank = FrameInputs::new(&cams, &zeros, &pts);
        assert_eq!(compute_confidence(&gt, &blank, None), 0.0);
        let r = align_photometric(&gt, &blank, DofMode::Full6, &TrackerConfig::default()).unwrap();
        assert!(!r.success && r.confidence == 0.0);
    }

    #[test]
    fn nothing_visible_is_an_error() {
        let far = Pose::from_translation(1e5, 1e5, 0.0);
        let (cams, maps, pts) = frame(&world().trajectory[60]);
        let inputs = FrameInputs::new(&cams, &maps, &pts);
        assert_eq!(align_photometric(&far, &inputs, DofMode::Full6, &TrackerConfig::default()), Err(TrackError::NoVisiblePoints));
    }
}
