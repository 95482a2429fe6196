//! Render one frame's masks and turn them into cost maps with both
//! builders; writes PGM masks and PFM cost maps to `target/costmaps/`.

use semloc::costmap::{
    build_costmap, build_costmap_distance_transform, write_costmap, write_mask, CostMapConfig,
};
use semloc::sim::{front_camera, generate_world, render_masks, RenderParams, WorldSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&WorldSpec::highway(60))?;
    let cam = front_camera();
    let masks = render_masks(&world.map, &cam, &world.trajectory[30], &RenderParams::default());
    let out = std::path::Path::new("target/costmaps");
    std::fs::create_dir_all(out)?;
    let cfg = CostMapConfig::default();
    for mask in &masks {
        let ramp = build_costmap(mask, &cfg);
        let edt = build_costmap_distance_transform(mask, 20.0);
        let mean = |d: &[f32]| d.iter().map(|&v| v as f64).sum::<f64>() / d.len() as f64;
        println!(
            "{:<10} occupied {:6} px   ramp mean {:.4}   distance-transform mean {:.4}",
            mask.class.to_string(),
            mask.occupied(),
            mean(&ramp.data),
            mean(&edt.data)
        );
        write_mask(mask, out.join(format!("{}.pgm", mask.class)))?;
        write_costmap(&ramp, out.join(format!("{}_ramp.pfm", mask.class)))?;
        write_costmap(&edt, out.join(format!("{}_edt.pfm", mask.class)))?;
    }
    println!("images in {}", out.display());
    Ok(())
}
