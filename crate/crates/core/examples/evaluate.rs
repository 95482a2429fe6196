//! Relative pose error of a dead-reckoned trajectory against ground truth,
//! written to and read back from trajectory files.

use semloc::eval::{compute_rpe, Trajectory};
use semloc::sim::{generate_world, simulate_sensors, SensorNoiseSpec, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(300))?;
    let sensors = simulate_sensors(&world.trajectory, &world.timestamps, &SensorNoiseSpec::default(), 5);
    let (mut est, mut reference) = (Trajectory::new(), Trajectory::new());
    let mut pose = sensors[0].ground_truth;
    for s in &sensors {
        pose = pose.compose(&s.odometry);
        est.push(s.timestamp, pose);
        reference.push(s.timestamp, s.ground_truth);
    }
    let dir = std::env::temp_dir().join("semloc-evaluate");
    std::fs::create_dir_all(&dir)?;
    est.save(dir.join("odometry.txt"))?;
    reference.save(dir.join("truth.txt"))?;
    let est = Trajectory::load(dir.join("odometry.txt"))?;
    for interval in [1, 5, 20] {
        let rpe = compute_rpe(&est, &reference, interval)?;
        println!("interval {interval:2}:");
        print!("{}", rpe.summary());
    }
    Ok(())
}
