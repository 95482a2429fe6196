//! On a straight road with lane markings only, the images say nothing about
//! the along-track position. Odometry reading 0.5% long then drifts unless
//! GPS corrects the longitudinal axis.

use semloc::pipeline::{run_sequence, PipelineConfig};
use semloc::sim::{front_camera, generate_world, simulate_sequence, SensorNoiseSpec, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::straight(600))?;
    let noise = SensorNoiseSpec { odom_scale_bias: 0.005, ..SensorNoiseSpec::default() };
    let seq = simulate_sequence(world.map, &world.trajectory, &world.timestamps, vec![front_camera()], &noise, 4)?;
    for correction in [false, true] {
        let mut cfg = PipelineConfig::default();
        cfg.tracker.longitudinal_correction = correction;
        let run = run_sequence(&seq, &cfg)?;
        let along = |k: usize| {
            let f = &run.frames[k];
            seq.frames[k].ground_truth.inverse().compose(&f.pose.unwrap()).translation.x
        };
        let rpe = run.rpe(5)?;
        println!(
            "correction {:<5}: along-track error {:+.2} m at frame 200, {:+.2} m at frame 599; lateral RPE {:.3} m",
            correction,
            along(200),
            along(599),
            rpe.mean_lateral
        );
    }
    Ok(())
}
