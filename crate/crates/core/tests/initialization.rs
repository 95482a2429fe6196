//! Grid search against exhaustive enumeration, and recovery from GPS-sized
//! offsets.

use semloc::costmap::CostMapConfig;
use semloc::geometry::Pose;
use semloc::hdmap::crop_local_map_ahead;
use semloc::initializer::{
    build_frame_costmaps, evaluate_pose_cost, grid_search_refine, subsample_points, FrameInputs, GridAxis, GridAxisKind, GridSpec,
};
use semloc::sim::{front_camera, generate_world, simulate_sequence, FrameSource, SensorNoiseSpec, SyntheticSequence, WorldSpec};

fn sequence() -> SyntheticSequence {
    let world = generate_world(&WorldSpec::highway(120)).unwrap();
    simulate_sequence(world.map, &world.trajectory, &world.timestamps, vec![front_camera()], &SensorNoiseSpec::noiseless(), 11)
        .unwrap()
}

#[test]
fn grid_search_matches_nested_loop_enumeration() {
    let seq = sequence();
    let grid = GridSpec {
        axes: vec![
            GridAxis::new(GridAxisKind::Lateral, 1.0, 0.5),
            GridAxis::new(GridAxisKind::Longitudinal, 2.0, 1.0),
            GridAxis::new(GridAxisKind::Yaw, 2f64.to_radians(), 1f64.to_radians()),
        ],
        min_visible: 0.3,
    };
    let cfg = CostMapConfig::default();
    for k in [10, 60, 110] {
        let gt = seq.frames[k].ground_truth;
        let coarse = gt.compose(&Pose::from_xyz_yaw(0.4, -0.7, 0.0, 0.01));
        let maps = build_frame_costmaps(&seq.masks(k).unwrap(), &cfg);
        let points = subsample_points(&crop_local_map_ahead(&seq.map, &coarse, 80.0, 0.5, 30.0), 300);
        let inputs = FrameInputs::new(&seq.cameras, &maps, &points);
        let found = grid_search_refine(&coarse, &grid, &inputs).unwrap();

        let mut best: Option<(f64, i32, Pose)> = None;
        for i in -2..=2i32 {
            for j in -2..=2i32 {
                for m in -2..=2i32 {
                    let cand = coarse.compose(&Pose::from_xyz_yaw(j as f64, 0.5 * i as f64, 0.0, (m as f64).to_radians()));
                    let Ok(e) = evaluate_pose_cost(&cand, &inputs) else { continue };
                    if e.visible_fraction < grid.min_visible {
                        continue;
                    }
                    let steps = i * i + j * j + m * m;
                    if best.is_none_or(|(c, s, _)| e.mean_cost < c || (e.mean_cost == c && steps < s)) {
                        best = Some((e.mean_cost, steps, cand));
                    }
                }
            }
        }
        let (cost, _, pose) = best.unwrap();
        assert_eq!(found.mean_cost, cost, "frame {k}");
        assert!(found.pose.inverse().compose(&pose).log().norm() < 1e-12, "frame {k}");
    }
}

#[test]
fn recovers_gps_sized_offsets() {
    let seq = sequence();
    let cfg = CostMapConfig::default();
    for (k, lat, lon, yaw) in [(15, 3.0, 2.0, 3.0), (50, -6.0, -4.0, -5.0), (95, 9.0, 1.0, 2.0)] {
        let gt = seq.frames[k].ground_truth;
        let coarse = gt.compose(&Pose::from_xyz_yaw(lon, lat, 0.0, f64::to_radians(yaw)));
        let maps = build_frame_costmaps(&seq.masks(k).unwrap(), &cfg);
        let points = subsample_points(&crop_local_map_ahead(&seq.map, &coarse, 80.0, 0.5, 30.0), 300);
        let found = grid_search_refine(&coarse, &GridSpec::default(), &FrameInputs::new(&seq.cameras, &maps, &points)).unwrap();
        let e = gt.inverse().compose(&found.pose);
        assert!(e.translation.y.abs() <= 0.2 + 1e-9, "frame {k}: lateral {}", e.translation.y);
        assert!(e.yaw().abs() <= 1f64.to_radians() + 1e-9, "frame {k}: yaw {}", e.yaw().to_degrees());
    }
}
