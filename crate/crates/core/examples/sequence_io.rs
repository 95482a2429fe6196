//! Write a simulated sequence to disk, reopen it as a directory source and
//! localize against the replay.

use semloc::pipeline::{run_sequence, write_sequence, DirSequence, PipelineConfig};
use semloc::sim::{front_camera, generate_world, rear_camera, simulate_sequence, FrameSource, SensorNoiseSpec, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(60))?;
    let seq = simulate_sequence(
        world.map,
        &world.trajectory,
        &world.timestamps,
        vec![front_camera(), rear_camera()],
        &SensorNoiseSpec::default(),
        2,
    )?;
    let dir = std::env::temp_dir().join("semloc-sequence");
    write_sequence(&seq, &dir)?;
    let files = std::fs::read_dir(dir.join("masks"))?.count();
    println!("wrote {} frames, {files} mask files to {}", seq.len(), dir.display());
    let replay = DirSequence::open(&dir)?;
    let run = run_sequence(&replay, &PipelineConfig::default())?;
    print!("{}", run.rpe(5)?.summary());
    Ok(())
}
