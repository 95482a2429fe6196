//! Localize along a simulated 500-frame highway drive and report the
//! relative pose error against ground truth.

use std::time::Instant;

use semloc::pipeline::{run_sequence, Config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let seq = cfg.simulate()?;
    let t = Instant::now();
    let run = run_sequence(&seq, &cfg.pipeline())?;
    let elapsed = t.elapsed();
    let rpe = run.rpe(5)?;
    print!("{}", rpe.summary());
    for tr in &run.transitions {
        println!("frame {:4}: {} -> {}", tr.frame, tr.from, tr.to);
    }
    let tracked = run.frames.iter().filter(|f| f.success).count();
    println!("successful frames: {tracked}/{}", run.frames.len());
    println!("mean tracking time per frame: {:.2} ms", run.mean_tracking_ms());
    println!("wall time: {:.1} s", elapsed.as_secs_f64());
    Ok(())
}
