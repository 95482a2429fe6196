//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::costmap::CostMapConfig;
use crate::geometry::CameraModel;
use crate::initializer::GridSpec;
use crate::posegraph::GraphConfig;
use crate::sim::{generate_world, simulate_sequence, RenderParams, SensorNoiseSpec, SyntheticSequence, WorldSpec};
use crate::tracker::TrackerConfig;

use super::{PipelineConfig, PipelineError, QueryConfig};

/// Pinhole intrinsics plus the mounting pose on the vehicle: position in
/// meters, yaw about the vehicle z axis and downward tilt in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch_down: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec {
            fx: 500.0,
            fy: 500.0,
            cx: 319.5,
            cy: 179.5,
            width: 640,
            height: 360,
            x: 1.5,
            y: 0.0,
            z: 1.5,
            yaw: 0.0,
            pitch_down: 0.03,
        }
    }
}

impl CameraSpec {
    pub fn rear() -> Self {
        CameraSpec { x: -0.5, yaw: std::f64::consts::PI, ..CameraSpec::default() }
    }

    pub fn to_model(&self) -> Result<CameraModel, PipelineError> {
        let mount = CameraModel::vehicle_mount(self.x, self.y, self.z, self.yaw, self.pitch_down);
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height, mount)
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Frames whose masks are wiped, on one camera or all.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlankSpec {
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub camera: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    /// Sequence directory written by `gen`; without it the sequence is
    /// simulated in memory from the world, camera and noise sections.
    pub sequence: Option<PathBuf>,
    pub output: PathBuf,
    pub rpe_interval: usize,
    /// Frames allowed for the first initialization (0 means unlimited).
    pub init_budget: usize,
    /// Number of start frames for the initialization rate.
    pub init_starts: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { sequence: None, output: PathBuf::from("out"), rpe_interval: 5, init_budget: 50, init_starts: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    pub world: WorldSpec,
    pub cameras: Vec<CameraSpec>,
    pub noise: SensorNoiseSpec,
    pub render: RenderParams,
    pub blank: Vec<BlankSpec>,
    pub map: QueryConfig,
    pub grid: GridSpec,
    pub tracker: TrackerConfig,
    pub graph: GraphConfig,
    pub costmap: CostMapConfig,
    pub run: RunSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            world: WorldSpec::default(),
            cameras: vec![CameraSpec::default()],
            noise: SensorNoiseSpec::default(),
            render: RenderParams::default(),
            blank: Vec::new(),
            map: QueryConfig::default(),
            grid: GridSpec::default(),
            tracker: TrackerConfig::default(),
            graph: GraphConfig::default(),
            costmap: CostMapConfig::default(),
            run: RunSection::default(),
        }
    }
}

impl Config {
    /// Parses TOML; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.world.extend_road_to_fit();
        if let Some(seq) = &cfg.run.sequence {
            cfg.run.sequence = Some(base.join(seq));
        }
        cfg.run.output = base.join(&cfg.run.output);
        cfg.pipeline().validate()?;
        if cfg.cameras.is_empty() {
            return Err(PipelineError::Config("at least one camera is required".into()));
        }
        if cfg.run.rpe_interval == 0 {
            return Err(PipelineError::Config("rpe_interval must be at least 1".into()));
        }
        cfg.cameras()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn cameras(&self) -> Result<Vec<CameraModel>, PipelineError> {
        self.cameras.iter().map(CameraSpec::to_model).collect()
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            query: self.map.clone(),
            grid: self.grid.clone(),
            tracker: self.tracker.clone(),
            graph: self.graph.clone(),
            costmap: self.costmap,
            init_budget: self.run.init_budget,
        }
    }

    /// Simulates the configured world and sensors.
    pub fn simulate(&self) -> Result<SyntheticSequence, PipelineError> {
        let world = generate_world(&self.world)?;
        let mut seq = simulate_sequence(world.map, &world.trajectory, &world.timestamps, self.cameras()?, &self.noise, self.seed)?;
        seq.render = self.render;
        for b in &self.blank {
            seq.blank(b.start..b.end, b.camera);
        }
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = Config::parse("", Path::new("/tmp")).unwrap();
        assert_eq!(cfg.world, WorldSpec::default());
        assert_eq!(cfg.run.output, PathBuf::from("/tmp/out"));
        assert_eq!(cfg.cameras().unwrap()[0], crate::sim::front_camera());
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
            seed = 9
            [world]
            frames = 40
            pole_spacing = 0.0
            [[cameras]]
            [[cameras]]
            x = -0.5
            yaw = 3.141592653589793
            [noise]
            gps_sigma = 1.0
            [[blank]]
            start = 5
            end = 8
            camera = 0
            [tracker]
            huber_delta = 0.2
            dof_policy = "decoupled"
            [graph]
            lambda = 2.0
            [grid]
            axes = [{ axis = "lateral", range = 2.0, step = 0.5 }]
            [run]
            sequence = "seq"
        "#;
        let cfg = Config::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.world.frames, 40);
        assert_eq!(cfg.cameras().unwrap()[1], crate::sim::rear_camera());
        assert_eq!(cfg.noise.gps_sigma, 1.0);
        assert_eq!(cfg.tracker.dof_policy, crate::tracker::DofPolicy::Decoupled);
        assert_eq!(cfg.graph.lambda, 2.0);
        assert_eq!(cfg.grid.candidate_count(), 9);
        assert_eq!(cfg.run.sequence, Some(PathBuf::from("/data/seq")));
        let seq = cfg.simulate().unwrap();
        assert_eq!(seq.frames.len(), 40);
        assert_eq!(seq.blanking.len(), 1);
        assert_eq!(Config::parse(&cfg.to_toml(), Path::new("/")).unwrap().tracker, cfg.tracker);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in ["[graph]\nwindow_capacity = 1", "[tracker]\nhuber_delta = -1.0", "cameras = []", "[world\n", "[[cameras]]\nfx = 0.0"] {
            assert!(matches!(Config::parse(text, Path::new(".")), Err(PipelineError::Config(_))), "{text}");
        }
    }
}
