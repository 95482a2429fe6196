//! Build a map, round-trip it through the text format, and query the local
//! neighbourhood of a pose.

use semloc::hdmap::{crop_local_map, crop_local_map_ahead, parse_map, write_map, LandmarkClass};
use semloc::sim::{generate_world, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(300))?;
    let text = write_map(&world.map);
    let map = parse_map(&text)?;
    println!("{} landmarks, {} bytes as text", map.len(), text.len());
    for class in LandmarkClass::ALL {
        let n = map.landmarks().iter().filter(|l| l.class == class).count();
        println!("  {class:<10} {n}");
    }
    let pose = world.trajectory[150];
    let near = map.query_radius(&pose.translation, 50.0);
    println!("landmarks within 50 m of frame 150: {}", near.len());
    let disc = crop_local_map(&map, &pose, 80.0, 0.5);
    let ahead = crop_local_map_ahead(&map, &pose, 80.0, 0.5, 30.0);
    println!("samples every 0.5 m: {} in the 80 m disc, {} in the disc centred 30 m ahead", disc.len(), ahead.len());
    Ok(())
}
