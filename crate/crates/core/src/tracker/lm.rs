//! Levenberg-Marquardt over the alignment residuals `r = I_s(u) - 1`, for
//! either a right perturbation of the full pose or a subset of Euler-angle
//! and heading-frame translation parameters.

use nalgebra::{Matrix1x6, Matrix3, Matrix3x6, Matrix6, SymmetricEigen, Vector6};

use crate::geometry::{
    jacobian_point_euler, jacobian_point_se3, jacobian_point_translation, jacobian_projection, yaw_matrix, EulerAxis,
    EulerPose, Pose, Tangent,
};
use crate::initializer::FrameInputs;

/// Pose being optimized. Euler parameters are ordered `(tx, ty, tz, roll,
/// pitch, yaw)` with the translation expressed in a fixed heading frame, so
/// `tx` is longitudinal and `ty` lateral.
#[derive(Clone, Copy, Debug)]
pub(crate) enum State {
    Se3(Pose),
    Euler { pose: EulerPose, heading: Matrix3<f64> },
}

impl State {
    pub(crate) fn euler(pose: &Pose) -> Self {
        let e = EulerPose::from_pose(pose);
        State::Euler { pose: e, heading: yaw_matrix(e.yaw) }
    }

    pub(crate) fn pose(&self) -> Pose {
        match self {
            State::Se3(p) => *p,
            State::Euler { pose, .. } => pose.to_pose(),
        }
    }

    fn apply(&self, delta: &Vector6<f64>, active: &[bool; 6]) -> State {
        match *self {
            State::Se3(p) => State::Se3(p.retract(&Tangent(*delta))),
            State::Euler { mut pose, heading } => {
                let dt = heading * delta.fixed_rows::<3>(0);
                if active[..3].iter().any(|&a| a) {
                    pose.set_translation(&(pose.translation() + dt));
                }
                if active[3] {
                    pose.roll += delta[3];
                }
                if active[4] {
                    pose.pitch += delta[4];
                }
                if active[5] {
                    pose.yaw += delta[5];
                }
                State::Euler { pose, heading }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Kernel {
    Huber(f64),
    Quadratic,
}

impl Kernel {
    fn rho(&self, r: f64) -> f64 {
        match *self {
            Kernel::Huber(d) if r.abs() > d => d * (r.abs() - 0.5 * d),
            _ => 0.5 * r * r,
        }
    }

    /// IRLS weight `rho'(r) / r`.
    fn weight(&self, r: f64) -> f64 {
        match *self {
            Kernel::Huber(d) if r.abs() > d => d / r.abs(),
            _ => 1.0,
        }
    }
}

pub(crate) struct Problem<'a> {
    pub inputs: FrameInputs<'a>,
    pub kernel: Kernel,
    /// Optional observation filter indexed by `point * n_cameras + camera`.
    pub inliers: Option<&'a [bool]>,
    pub active: [bool; 6],
}

#[derive(Clone, Debug, Default)]
pub(crate) struct LmOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
    /// Sum of the accepted parameter steps.
    pub delta: Vector6<f64>,
}

/// Steps below this (meters or radians) end the run.
const STEP_TOLERANCE: f64 = 1e-7;

pub(crate) struct LmSettings {
    pub max_iterations: usize,
    pub initial_lambda: f64,
}

impl Problem<'_> {
    fn included(&self, pi: usize, ci: usize) -> bool {
        self.inliers.is_none_or(|m| m[pi * self.inputs.cameras.len() + ci])
    }

    /// Mean kernelized residual over the visible included observations.
    pub(crate) fn objective(&self, state: &State) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        self.inputs.for_each_visible(&state.pose(), |pi, ci, _, u, map| {
            if self.included(pi, ci) {
                let (v, _) = map.sample_unchecked(u.x, u.y);
                sum += self.kernel.rho(v - 1.0);
                n += 1;
            }
        });
        (n > 0).then(|| sum / n as f64)
    }

    /// Objective, Gauss-Newton matrix and gradient, all normalized by the
    /// number of visible observations.
    pub(crate) fn linearize(&self, state: &State) -> Option<(f64, Matrix6<f64>, Vector6<f64>)> {
        let pose = state.pose();
        let cams = self.inputs.cameras;
        // Per-camera constant factors of the Euler parameterization.
        let trans_jac: Vec<Matrix3<f64>> = match state {
            State::Euler { heading, .. } => {
                cams.iter().map(|c| jacobian_point_translation(&pose, &c.extrinsic_bc) * heading).collect()
            }
            State::Se3(_) => Vec::new(),
        };
        let cb: Vec<Pose> = cams.iter().map(|c| c.extrinsic_cb()).collect();
        let mut h = Matrix6::zeros();
        let mut g = Vector6::zeros();
        let mut f = 0.0;
        let mut n = 0usize;
        self.inputs.for_each_visible(&pose, |pi, ci, p_c, u, map| {
            if !self.included(pi, ci) {
                return;
            }
            let (v, grad) = map.sample_unchecked(u.x, u.y);
            let r = v - 1.0;
            f += self.kernel.rho(r);
            n += 1;
            let Ok(jp) = jacobian_projection(&cams[ci], p_c) else { return };
            let jpt: Matrix3x6<f64> = match state {
                State::Se3(_) => jacobian_point_se3(p_c, &cb[ci]),
                State::Euler { pose: e, .. } => {
                    let mut m = Matrix3x6::zeros();
                    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&trans_jac[ci]);
                    let p_w = &self.inputs.points[pi].position;
                    for (k, axis) in [EulerAxis::X, EulerAxis::Y, EulerAxis::Z].into_iter().enumerate() {
                        if self.active[3 + k] {
                            if let Ok(col) = jacobian_point_euler(e, &cams[ci].extrinsic_bc, p_w, axis) {
                                m.set_column(3 + k, &col);
                            }
                        }
                    }
                    m
                }
            };
            let mut j: Matrix1x6<f64> = grad.transpose() * jp * jpt;
            for k in 0..6 {
                if !self.active[k] {
                    j[k] = 0.0;
                }
            }
            let w = self.kernel.weight(r);
            h += j.transpose() * j * w;
            g += j.transpose() * (w * r);
        });
        (n > 0).then(|| {
            let s = 1.0 / n as f64;
            (f * s, h * s, g * s)
        })
    }

    /// Runs LM from `state`. Accepted steps never increase the objective.
    pub(crate) fn solve(&self, state: &mut State, settings: &LmSettings) -> Option<LmOutcome> {
        let (mut f, mut h, mut g) = self.linearize(state)?;
        let mut out = LmOutcome { history: vec![f], ..Default::default() };
        let mut lambda = settings.initial_lambda;
        let n_active = self.active.iter().filter(|&&a| a).count();
        if n_active == 0 {
            out.converged = true;
            return Some(out);
        }
        for _ in 0..settings.max_iterations {
            if g.amax() < 1e-12 || f < 1e-12 {
                break;
            }
            out.iterations += 1;
            let Some(delta) = damped_step(&h, &g, lambda, &self.active) else {
                out.degenerate = true;
                break;
            };
            let cand = state.apply(&delta, &self.active);
            match self.objective(&cand) {
                Some(fc) if fc <= f => {
                    *state = cand;
                    out.delta += delta;
                    let gain = f - fc;
                    lambda = (lambda / 10.0).max(1e-12);
                    let Some(lin) = self.linearize(state) else { break };
                    (f, h, g) = lin;
                    out.history.push(f);
                    if delta.amax() < STEP_TOLERANCE || gain <= 1e-9 * f {
                        break;
                    }
                }
                _ => {
                    lambda *= 10.0;
                    if lambda > 1e10 {
                        // No descent direction left at this resolution.
                        break;
                    }
                }
            }
        }
        if f >= 1e-12 && is_rank_deficient(&h, &self.active) {
            out.degenerate = true;
        }
        // Every accepted step lowered the objective, so anything short of a
        // singular system counts as converged.
        out.converged = !out.degenerate;
        Some(out)
    }
}

fn damped_step(h: &Matrix6<f64>, g: &Vector6<f64>, lambda: f64, active: &[bool; 6]) -> Option<Vector6<f64>> {
    let max_diag = (0..6).filter(|&k| active[k]).map(|k| h[(k, k)]).fold(0.0, f64::max);
    let floor = (1e-6 * max_diag).max(1e-12);
    let mut a = *h;
    for k in 0..6 {
        if active[k] {
            a[(k, k)] += lambda * h[(k, k)].max(floor);
        } else {
            a.row_mut(k).fill(0.0);
            a.column_mut(k).fill(0.0);
            a[(k, k)] = 1.0;
        }
    }
    let mut rhs = -g;
    for k in 0..6 {
        if !active[k] {
            rhs[k] = 0.0;
        }
    }
    let step = a.cholesky()?.solve(&rhs);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

fn is_rank_deficient(h: &Matrix6<f64>, active: &[bool; 6]) -> bool {
    let idx: Vec<usize> = (0..6).filter(|&k| active[k]).collect();
    let sub = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
    let eig = SymmetricEigen::new(sub).eigenvalues;
    let max = eig.amax();
    max == 0.0 || eig.min() <= 1e-14 * max
}
