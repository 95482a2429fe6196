//! Fuse noisy absolute poses with odometry in the sliding window and compare
//! the result with the raw priors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use semloc::geometry::Pose;
use semloc::posegraph::{GraphConfig, SlidingWindow, WindowFrame};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.3)?;
    let cfg = GraphConfig::default();
    let step = Pose::from_xyz_yaw(2.0, 0.0, 0.0, 0.01);
    let mut window = SlidingWindow::new();
    let mut truth = Pose::identity();
    let (mut prior_err, mut fused_err) = (0.0, 0.0);
    for k in 0..60u64 {
        if k > 0 {
            truth = truth.compose(&step);
        }
        let prior = truth.compose(&Pose::from_translation(noise.sample(&mut rng), noise.sample(&mut rng), 0.0));
        window.add_frame(WindowFrame::new(k, prior, true, 1.0), &step, &cfg)?;
        let report = window.optimize(&cfg)?;
        let newest = window.newest().unwrap();
        if k >= 20 {
            prior_err += (prior.translation - truth.translation).norm();
            fused_err += (newest.optimized_pose.translation - truth.translation).norm();
        }
        if k % 10 == 9 {
            println!("frame {k:2}: window {:2}, {} iterations, objective {:.4}", window.len(), report.iterations, report.history.last().unwrap());
        }
    }
    println!("mean position error over frames 20..60: priors {:.3} m, fused {:.3} m", prior_err / 40.0, fused_err / 40.0);
    Ok(())
}
