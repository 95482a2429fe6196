//! Align one frame from a perturbed prediction in both solver modes and
//! print the objective history.

use semloc::costmap::CostMapConfig;
use semloc::geometry::Pose;
use semloc::hdmap::crop_local_map_ahead;
use semloc::initializer::{build_frame_costmaps, subsample_points, FrameInputs};
use semloc::sim::{front_camera, generate_world, simulate_sequence, FrameSource, SensorNoiseSpec, WorldSpec};
use semloc::tracker::{align_photometric, detect_longitudinal_constraint, DofMode, TrackerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(120))?;
    let seq = simulate_sequence(world.map, &world.trajectory, &world.timestamps, vec![front_camera()], &SensorNoiseSpec::noiseless(), 1)?;
    let k = 80;
    let truth = seq.frames[k].ground_truth;
    let pred = truth.compose(&Pose::from_xyz_yaw(0.3, 0.4, 0.05, 0.8f64.to_radians()));
    let costmaps = build_frame_costmaps(&seq.masks(k)?, &CostMapConfig::default());
    let points = subsample_points(&crop_local_map_ahead(&seq.map, &pred, 80.0, 0.5, 30.0), 0);
    let inputs = FrameInputs::new(&seq.cameras, &costmaps, &points);
    let cfg = TrackerConfig::default();
    println!("constraint: {:?}", detect_longitudinal_constraint(&points, &pred, &seq.cameras, &cfg));
    for mode in [DofMode::Full6, DofMode::Decoupled] {
        let r = align_photometric(&pred, &inputs, mode, &cfg)?;
        let e = truth.inverse().compose(&r.pose);
        println!(
            "{mode:?}: {} iterations, cost {:.4} -> {:.4}, confidence {:.3}, success {}",
            r.iterations, r.initial_cost, r.final_cost, r.confidence, r.success
        );
        for (stage, h) in r.objective_history.iter().enumerate() {
            let trace: Vec<String> = h.iter().map(|v| format!("{v:.4}")).collect();
            println!("  stage {stage}: {}", trace.join(" "));
        }
        println!(
            "  error: longitudinal {:+.3} m, lateral {:+.3} m, height {:+.3} m, rotation {:.3} deg",
            e.translation.x,
            e.translation.y,
            e.translation.z,
            e.angle().to_degrees()
        );
    }
    Ok(())
}
