//! Project the map through the front and rear cameras and print a coarse
//! text preview of each camera's masks.

use semloc::hdmap::LandmarkClass;
use semloc::sim::{front_camera, generate_world, rear_camera, render_masks, RenderParams, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(100))?;
    let pose = world.trajectory[60];
    for (name, cam) in [("front", front_camera()), ("rear", rear_camera())] {
        let masks = render_masks(&world.map, &cam, &pose, &RenderParams::default());
        println!("{name} camera, {}x{}:", cam.width, cam.height);
        let (cw, ch) = (8, 16);
        for by in 0..cam.height / ch {
            let row: String = (0..cam.width / cw)
                .map(|bx| {
                    let hit = |c: LandmarkClass| {
                        let m = &masks[c.index()];
                        (by * ch..(by + 1) * ch).any(|y| (bx * cw..(bx + 1) * cw).any(|x| m.get(x, y)))
                    };
                    if hit(LandmarkClass::Signboard) {
                        '#'
                    } else if hit(LandmarkClass::Pole) {
                        '|'
                    } else if hit(LandmarkClass::LaneMarking) {
                        '.'
                    } else {
                        ' '
                    }
                })
                .collect();
            println!("  {row}");
        }
    }
    Ok(())
}
