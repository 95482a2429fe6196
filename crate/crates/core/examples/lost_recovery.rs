//! Every camera goes blind for 15 frames: the localizer declares itself
//! lost, keeps publishing dead-reckoned poses, and re-initializes from GPS.

use semloc::pipeline::{run_sequence, PipelineConfig};
use semloc::sim::{front_camera, generate_world, simulate_sequence, SensorNoiseSpec, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(200))?;
    let mut seq = simulate_sequence(world.map, &world.trajectory, &world.timestamps, vec![front_camera()], &SensorNoiseSpec::default(), 1)?;
    seq.blank(100..115, None);
    let run = run_sequence(&seq, &PipelineConfig::default())?;
    for t in &run.transitions {
        println!("frame {:3}: {} -> {}", t.frame, t.from, t.to);
    }
    for f in &run.frames[95..130] {
        let e = seq.frames[f.frame].ground_truth.inverse().compose(&f.pose.unwrap());
        println!(
            "frame {:3} {:<12} source {:<14} lateral error {:+.3} m  longitudinal error {:+.3} m",
            f.frame,
            f.state.to_string(),
            f.source.map_or("-".into(), |s| format!("{s:?}")),
            e.translation.y,
            e.translation.x
        );
    }
    Ok(())
}
