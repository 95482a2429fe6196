//! Front-only versus front+rear, then the rear camera carrying the run
//! alone while the front one is disabled.

use semloc::pipeline::{run_sequence, PipelineConfig};
use semloc::posegraph::LocalizationState;
use semloc::sim::{front_camera, generate_world, rear_camera, simulate_sequence, SensorNoiseSpec, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(300))?;
    let cfg = PipelineConfig::default();
    let mut rigs = vec![
        ("front", simulate_sequence(world.map.clone(), &world.trajectory, &world.timestamps, vec![front_camera()], &SensorNoiseSpec::default(), 1)?),
        (
            "front+rear",
            simulate_sequence(world.map.clone(), &world.trajectory, &world.timestamps, vec![front_camera(), rear_camera()], &SensorNoiseSpec::default(), 1)?,
        ),
    ];
    let mut disabled = rigs[1].1.clone();
    disabled.blank(100..250, Some(0));
    rigs.push(("front off 100..250", disabled));
    for (name, seq) in &rigs {
        let run = run_sequence(seq, &cfg)?;
        let rpe = run.rpe(5)?;
        println!(
            "{name:<20} lateral {:.3} m  longitudinal {:.3} m  rotation {:.3} deg  lost {} times  {:.1} ms/frame",
            rpe.mean_lateral,
            rpe.mean_longitudinal,
            rpe.mean_rotation_deg,
            run.transitions.iter().filter(|t| t.to == LocalizationState::Lost).count(),
            run.mean_tracking_ms()
        );
    }
    Ok(())
}
