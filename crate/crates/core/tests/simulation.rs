//! The simulator agrees with the cost function it is meant to exercise.

use semloc::costmap::CostMapConfig;
use semloc::geometry::Pose;
use semloc::hdmap::crop_local_map_ahead;
use semloc::initializer::{build_frame_costmaps, evaluate_pose_cost, subsample_points, FrameInputs};
use semloc::sim::{front_camera, generate_world, rear_camera, simulate_sequence, FrameSource, SensorNoiseSpec, WorldSpec};

#[test]
fn ground_truth_beats_a_one_meter_lateral_offset() {
    let world = generate_world(&WorldSpec::highway(200)).unwrap();
    let seq = simulate_sequence(
        world.map,
        &world.trajectory,
        &world.timestamps,
        vec![front_camera(), rear_camera()],
        &SensorNoiseSpec::noiseless(),
        5,
    )
    .unwrap();
    let cfg = CostMapConfig::default();
    let mut better = 0;
    let mut worst_truth: f64 = 0.0;
    for k in 0..seq.len() {
        let gt = seq.frames[k].ground_truth;
        let maps = build_frame_costmaps(&seq.masks(k).unwrap(), &cfg);
        let points = subsample_points(&crop_local_map_ahead(&seq.map, &gt, 80.0, 0.5, 30.0), 400);
        let inputs = FrameInputs::new(&seq.cameras, &maps, &points);
        let truth = evaluate_pose_cost(&gt, &inputs).unwrap().mean_cost;
        let shifted = evaluate_pose_cost(&gt.compose(&Pose::from_translation(0.0, 1.0, 0.0)), &inputs).unwrap().mean_cost;
        worst_truth = worst_truth.max(truth);
        if truth < shifted {
            better += 1;
        }
    }
    assert!(better as f64 >= 0.99 * seq.len() as f64, "{better} of {}", seq.len());
    assert!(worst_truth < 0.05, "cost at ground truth {worst_truth}");
}

#[test]
fn same_seed_same_sequence() {
    let make = |seed| {
        let world = generate_world(&WorldSpec::highway(20)).unwrap();
        simulate_sequence(world.map, &world.trajectory, &world.timestamps, vec![front_camera()], &SensorNoiseSpec::default(), seed)
            .unwrap()
    };
    let (a, b, c) = (make(9), make(9), make(10));
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.masks(7).unwrap(), b.masks(7).unwrap());
    assert_ne!(a.frames, c.frames);
}
