//! Initialize from two noisy GPS fixes: coarse pose, then the exhaustive
//! lateral/longitudinal/yaw grid search against the frame's cost maps.

use std::time::Instant;

use semloc::costmap::CostMapConfig;
use semloc::geometry::Pose;
use semloc::hdmap::crop_local_map_ahead;
use semloc::initializer::{
    build_frame_costmaps, coarse_pose_from_gps, grid_search_refine, snap_yaw_to_lane, subsample_points, FrameInputs,
    GridSpec,
};
use semloc::sim::{front_camera, generate_world, simulate_sequence, FrameSource, SensorNoiseSpec, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(200))?;
    let cameras = vec![front_camera()];
    let seq = simulate_sequence(world.map.clone(), &world.trajectory, &world.timestamps, cameras.clone(), &SensorNoiseSpec::default(), 11)?;
    let grid = GridSpec::default();
    println!("grid candidates: {}", grid.candidate_count());
    for k in [20, 80, 140] {
        // Walk back to the newest fix at least 10 m away.
        let b = &seq.frames[k].gps;
        let a = (0..k).rev().map(|i| &seq.frames[i].gps).find(|a| (a.position - b.position).norm() >= 10.0).unwrap();
        let coarse = coarse_pose_from_gps(&a.position, &b.position, &world.map, 10.0, 10.0)?;
        let yaw = snap_yaw_to_lane(&world.map, &b.position, coarse.yaw(), 10.0);
        let coarse = Pose::from_xyz_yaw(coarse.translation.x, coarse.translation.y, coarse.translation.z, yaw);
        let costmaps = build_frame_costmaps(&seq.masks(k)?, &CostMapConfig::default());
        let points = subsample_points(&crop_local_map_ahead(&world.map, &coarse, 80.0, 0.5, 30.0), 300);
        let t = Instant::now();
        let found = grid_search_refine(&coarse, &grid, &FrameInputs::new(&cameras, &costmaps, &points))?;
        let gt = &world.trajectory[k];
        let err = |p: &Pose| gt.inverse().compose(p);
        let (c, f) = (err(&coarse), err(&found.pose));
        println!(
            "frame {k}: coarse error lon {:+.2} lat {:+.2} m, yaw {:+.2} deg -> grid error lon {:+.2} lat {:+.2} m, yaw {:+.2} deg, cost {:.3} ({:.0} ms)",
            c.translation.x,
            c.translation.y,
            c.yaw().to_degrees(),
            f.translation.x,
            f.translation.y,
            f.yaw().to_degrees(),
            found.mean_cost,
            t.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
