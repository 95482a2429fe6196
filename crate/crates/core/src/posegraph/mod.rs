//! Sliding-window fusion of per-frame alignment priors with odometry, and
//! the Initializing/Tracking/Lost state machine.

mod state;

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::geometry::{so3_log, Pose, Tangent};

pub use state::{FrameOutcome, LocalizationState, StateMachine};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("frame id {new} does not follow {last}")]
    NonMonotonicFrameId { last: u64, new: u64 },
    #[error("pose graph optimization diverged")]
    SolverDiverged,
    #[error("window is empty")]
    EmptyWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub window_capacity: usize,
    /// Weight of the odometry edges relative to unit-confidence priors.
    pub lambda: f64,
    /// Odometry shorter than this (m) marks the vehicle as stationary.
    pub stationary_threshold: f64,
    pub max_failures: usize,
    pub max_occluded: usize,
    pub max_iterations: usize,
    /// Meters of translation residual equivalent to one radian of rotation
    /// residual, in both prior and odometry factors.
    pub rotation_scale: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            window_capacity: 10,
            lambda: 1.0,
            stationary_threshold: 0.01,
            max_failures: 5,
            max_occluded: 10,
            max_iterations: 20,
            rotation_scale: 20.0,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window_capacity < 2 {
            return Err("window capacity must be at least 2".into());
        }
        if !(self.lambda >= 0.0) || !(self.stationary_threshold >= 0.0) {
            return Err("lambda and stationary threshold must be non-negative".into());
        }
        if !(self.rotation_scale > 0.0) {
            return Err("rotation scale must be positive".into());
        }
        if self.max_failures == 0 || self.max_occluded == 0 || self.max_iterations == 0 {
            return Err("thresholds must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowFrame {
    pub id: u64,
    /// Tracker estimate `T_i*`.
    pub prior_pose: Pose,
    pub prior_valid: bool,
    /// Information scale of the prior, the tracker confidence.
    pub prior_weight: f64,
    /// Odometry `T_ij` to the next frame in the window (identity for the
    /// newest frame).
    pub odom_to_next: Pose,
    pub optimized_pose: Pose,
}

impl WindowFrame {
    /// Frame whose optimization starts from its prior.
    pub fn new(id: u64, prior_pose: Pose, prior_valid: bool, prior_weight: f64) -> Self {
        WindowFrame {
            id,
            prior_pose,
            prior_valid,
            prior_weight,
            odom_to_next: Pose::identity(),
            optimized_pose: prior_pose,
        }
    }

    fn weight(&self) -> f64 {
        if self.prior_valid {
            self.prior_weight.max(0.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SlidingWindow {
    frames: VecDeque<WindowFrame>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphReport {
    pub iterations: usize,
    /// Objective after each accepted step, initial value first.
    pub history: Vec<f64>,
}

impl SlidingWindow {
    pub fn new() -> Self {
        SlidingWindow::default()
    }

    pub fn frames(&self) -> &VecDeque<WindowFrame> {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn newest(&self) -> Option<&WindowFrame> {
        self.frames.back()
    }

    /// Appends `frame`, reached from the current newest frame by
    /// `odom_from_prev`. Over capacity, the second-newest frame is dropped
    /// when the vehicle stood still (its odometry is merged into the edge
    /// that skips it), otherwise the oldest. Returns the removed id.
    pub fn add_frame(&mut self, frame: WindowFrame, odom_from_prev: &Pose, cfg: &GraphConfig) -> Result<Option<u64>, GraphError> {
        if let Some(last) = self.frames.back_mut() {
            if frame.id <= last.id {
                return Err(GraphError::NonMonotonicFrameId { last: last.id, new: frame.id });
            }
            last.odom_to_next = *odom_from_prev;
        }
        self.frames.push_back(frame);
        if self.frames.len() <= cfg.window_capacity {
            return Ok(None);
        }
        let n = self.frames.len();
        if odom_from_prev.translation.norm() < cfg.stationary_threshold && n >= 3 {
            let skipped = self.frames.remove(n - 2).expect("window has at least three frames");
            let before = &mut self.frames[n - 3];
            before.odom_to_next = before.odom_to_next.compose(&skipped.odom_to_next);
            Ok(Some(skipped.id))
        } else {
            Ok(self.frames.pop_front().map(|f| f.id))
        }
    }

    fn objective(&self, poses: &[Pose], cfg: &GraphConfig) -> f64 {
        residuals(&self.frames, poses, cfg).norm_squared()
    }

    /// Minimizes `sum_i w_i |e(T_i*^-1 T_i)|^2 + lambda sum |e(T_j^-1 T_i T_ij)|^2`,
    /// `e` being the translation and scaled rotation vector of a relative pose,
    /// over the window poses with Levenberg-Marquardt on right
    /// perturbations. On divergence the poses are left as they were.
    pub fn optimize(&mut self, cfg: &GraphConfig) -> Result<GraphReport, GraphError> {
        if self.frames.is_empty() {
            return Err(GraphError::EmptyWindow);
        }
        if cfg.lambda == 0.0 {
            // Priors are decoupled: each valid pose is its prior.
            for f in self.frames.iter_mut().filter(|f| f.weight() > 0.0) {
                f.optimized_pose = f.prior_pose;
            }
            return Ok(GraphReport { iterations: 0, history: vec![0.0] });
        }
        let mut poses: Vec<Pose> = self.frames.iter().map(|f| f.optimized_pose).collect();
        let n = poses.len();
        let mut f = self.objective(&poses, cfg);
        let initial = f;
        let mut history = vec![f];
        let mut mu = 1e-4;
        let mut iterations = 0;
        for _ in 0..cfg.max_iterations {
            if f < 1e-20 {
                break;
            }
            iterations += 1;
            let r = residuals(&self.frames, &poses, cfg);
            let j = numeric_jacobian(&self.frames, &poses, cfg);
            let h = j.transpose() * &j;
            let g = j.transpose() * &r;
            let mut accepted = false;
            while mu < 1e12 {
                let mut a = h.clone();
                let max_diag = (0..6 * n).map(|k| h[(k, k)]).fold(0.0, f64::max);
                for k in 0..6 * n {
                    a[(k, k)] += mu * h[(k, k)].max(1e-9 * max_diag.max(1e-12));
                }
                let Some(chol) = a.cholesky() else {
                    mu *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&g));
                let cand: Vec<Pose> = (0..n)
                    .map(|i| poses[i].retract(&Tangent(step.fixed_rows::<6>(6 * i).into_owned())))
                    .collect();
                let fc = self.objective(&cand, cfg);
                if fc.is_finite() && fc <= f {
                    let gain = f - fc;
                    poses = cand;
                    f = fc;
                    history.push(f);
                    mu = (mu / 10.0).max(1e-12);
                    accepted = true;
                    if gain <= 1e-14 * f.max(1e-30) || step.amax() < 1e-12 {
                        mu = f64::INFINITY;
                    }
                    break;
                }
                mu *= 10.0;
            }
            if !accepted || !mu.is_finite() {
                break;
            }
        }
        if !f.is_finite() || f > initial {
            return Err(GraphError::SolverDiverged);
        }
        for (frame, pose) in self.frames.iter_mut().zip(poses) {
            frame.optimized_pose = pose.renormalized();
        }
        Ok(GraphReport { iterations, history })
    }
}

/// Translation and scaled rotation vector of a relative pose, kept separate
/// so a translational disagreement cannot be traded for rotation as it can
/// through the coupled SE(3) logarithm.
fn relative_error(d: &Pose, rotation_scale: f64) -> Vector6<f64> {
    let r = so3_log(&d.rotation) * rotation_scale;
    Vector6::new(d.translation.x, d.translation.y, d.translation.z, r.x, r.y, r.z)
}

/// Stacked, square-root-weighted residual vector.
fn residuals(frames: &VecDeque<WindowFrame>, poses: &[Pose], cfg: &GraphConfig) -> DVector<f64> {
    let n = poses.len();
    let mut r = DVector::zeros(6 * n + 6 * n.saturating_sub(1));
    for (i, f) in frames.iter().enumerate() {
        let e = relative_error(&f.prior_pose.inverse().compose(&poses[i]), cfg.rotation_scale) * f.weight().sqrt();
        r.fixed_rows_mut::<6>(6 * i).copy_from(&e);
    }
    let sl = cfg.lambda.sqrt();
    for i in 0..n.saturating_sub(1) {
        let e = relative_error(&poses[i + 1].inverse().compose(&poses[i]).compose(&frames[i].odom_to_next), cfg.rotation_scale) * sl;
        r.fixed_rows_mut::<6>(6 * n + 6 * i).copy_from(&e);
    }
    r
}

fn numeric_jacobian(frames: &VecDeque<WindowFrame>, poses: &[Pose], cfg: &GraphConfig) -> DMatrix<f64> {
    let n = poses.len();
    let rows = 6 * n + 6 * n.saturating_sub(1);
    let mut j = DMatrix::zeros(rows, 6 * n);
    let h = 1e-6;
    let mut work = poses.to_vec();
    for i in 0..n {
        for k in 0..6 {
            let mut d = Vector6::zeros();
            d[k] = h;
            work[i] = poses[i].retract(&Tangent(d));
            let plus = residuals(frames, &work, cfg);
            work[i] = poses[i].retract(&Tangent(-d));
            let minus = residuals(frames, &work, cfg);
            work[i] = poses[i];
            j.set_column(6 * i + k, &((plus - minus) / (2.0 * h)));
        }
    }
    j
}
