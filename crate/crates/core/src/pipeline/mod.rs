//! End-to-end runs: configuration, sequence directories, the localization
//! loop, and the artifacts a run leaves behind.

mod config;
mod localizer;
mod sequence;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{CameraSpec, Config, RunSection};
pub use localizer::{FrameReport, Localizer, PipelineConfig, PoseSource, QueryConfig, StageTimings};
pub use sequence::{read_sequence_log, write_sequence, DirSequence};

use crate::eval::{compute_rpe, EvalError, RpeReport, Trajectory};
use crate::posegraph::{GraphError, LocalizationState};
use crate::sim::{FrameSource, SimError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("sequence not found: {0}")]
    SequenceNotFound(PathBuf),
    #[error("malformed sequence: {0}")]
    Sequence(String),
    #[error("initialization failed after {frames} frames")]
    InitializationFailed { frames: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub frame: usize,
    pub from: LocalizationState,
    pub to: LocalizationState,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Emitted poses, from the first initialization on.
    pub trajectory: Trajectory,
    /// Ground truth of every frame.
    pub reference: Trajectory,
    pub frames: Vec<FrameReport>,
    pub transitions: Vec<Transition>,
}

impl RunOutput {
    pub fn rpe(&self, interval: usize) -> Result<RpeReport, EvalError> {
        compute_rpe(&self.trajectory, &self.reference, interval)
    }

    pub fn confidence_csv(&self) -> String {
        let mut s = String::from(
            "frame,timestamp,state,next_state,source,confidence,success,occluded,mode,lm_iterations,post_processing_ms,query_ms,optimization_ms,search_ms\n",
        );
        for f in &self.frames {
            let source = f.source.map_or("none", |p| match p {
                PoseSource::Initialization => "initialization",
                PoseSource::Tracking => "tracking",
                PoseSource::Backup => "backup",
            });
            let mode = f.dof_mode.map_or("none", |m| match m {
                crate::tracker::DofMode::Full6 => "full6",
                crate::tracker::DofMode::Decoupled => "decoupled",
            });
            let t = &f.timings;
            writeln!(
                s,
                "{},{:.6},{},{},{},{:.6},{},{},{},{},{:.3},{:.3},{:.3},{:.3}",
                f.frame,
                f.timestamp,
                f.state,
                f.next_state,
                source,
                f.confidence,
                f.success,
                f.occluded,
                mode,
                f.lm_iterations,
                t.post_processing,
                t.query,
                t.optimization,
                t.search
            )
            .expect("writing to a string");
        }
        s
    }

    pub fn transitions_csv(&self) -> String {
        let mut s = String::from("frame,from,to\n");
        for t in &self.transitions {
            writeln!(s, "{},{},{}", t.frame, t.from, t.to).expect("writing to a string");
        }
        s
    }

    /// Mean per-frame time of tracked frames, milliseconds.
    pub fn mean_tracking_ms(&self) -> f64 {
        let tracked: Vec<f64> =
            self.frames.iter().filter(|f| f.state == LocalizationState::Tracking).map(|f| f.timings.total()).collect();
        if tracked.is_empty() {
            0.0
        } else {
            tracked.iter().sum::<f64>() / tracked.len() as f64
        }
    }

    /// Writes `trajectory.txt`, `confidence.csv`, `transitions.csv` and,
    /// when given, `rpe.csv` and `summary.txt`.
    pub fn write(&self, dir: &Path, rpe: Option<&RpeReport>) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir)?;
        self.trajectory.save(dir.join("trajectory.txt"))?;
        std::fs::write(dir.join("confidence.csv"), self.confidence_csv())?;
        std::fs::write(dir.join("transitions.csv"), self.transitions_csv())?;
        if let Some(r) = rpe {
            std::fs::write(dir.join("rpe.csv"), r.to_csv())?;
            std::fs::write(dir.join("summary.txt"), r.summary())?;
        }
        Ok(())
    }
}

/// Runs the localizer over every frame of `source`.
pub fn run_sequence(source: &dyn FrameSource, cfg: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let mut loc = Localizer::new(source.map(), source.cameras(), cfg);
    let mut out = RunOutput { trajectory: Trajectory::new(), reference: Trajectory::new(), frames: Vec::new(), transitions: Vec::new() };
    for (k, sensors) in source.sensors().iter().enumerate() {
        let report = loc.process(k, sensors, || source.masks(k))?;
        if report.state != report.next_state {
            out.transitions.push(Transition { frame: k, from: report.state, to: report.next_state });
        }
        if let Some(p) = report.pose {
            out.trajectory.push(sensors.timestamp, p);
        }
        out.reference.push(sensors.timestamp, sensors.ground_truth);
        out.frames.push(report);
    }
    Ok(out)
}

/// Share of start frames from which a fresh localizer reaches tracking
/// within `budget` frames.
pub fn init_success_rate(
    source: &dyn FrameSource,
    cfg: &PipelineConfig,
    budget: usize,
    starts: &[usize],
) -> Result<f64, PipelineError> {
    if budget == 0 {
        return Err(PipelineError::Config("initialization budget must be at least one frame".into()));
    }
    cfg.validate()?;
    if starts.is_empty() {
        return Ok(0.0);
    }
    let cfg = PipelineConfig { init_budget: 0, ..cfg.clone() };
    let sensors = source.sensors();
    let mut successes = 0;
    for &s in starts {
        let mut loc = Localizer::new(source.map(), source.cameras(), &cfg);
        for (k, sensor) in sensors.iter().enumerate().skip(s).take(budget) {
            loc.process(k, sensor, || source.masks(k))?;
            if loc.state() == LocalizationState::Tracking {
                successes += 1;
                break;
            }
        }
    }
    Ok(successes as f64 / starts.len() as f64)
}

/// `count` start frames spread evenly over a sequence, leaving room for
/// `budget` frames after each.
pub fn spread_starts(frames: usize, budget: usize, count: usize) -> Vec<usize> {
    let last = frames.saturating_sub(budget.max(1));
    if count == 0 || frames == 0 {
        return Vec::new();
    }
    if count == 1 || last == 0 {
        return vec![0];
    }
    let mut v: Vec<usize> = (0..count).map(|i| i * last / (count - 1)).collect();
    v.dedup();
    v
}
