//! Ground filtering on a sloped, undulating plot with standing trunks.
//!
//! The cloud is rasterized to minimum elevations, a progressive
//! morphological opening builds the terrain surface, and points are labelled
//! ground when they lie within the height threshold of it.
//!
//! ```text
//! cargo run --release --example ground_filter
//! ```

use stemhull::ground::{classify_ground, rasterize_min_elevation, smrf_surface, SmrfParams};
use stemhull::synth::{generate_plot, Extent, SceneConfig, TerrainParams, TrunkSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut trunks = Vec::new();
    for (i, (x, y)) in [(3.0, 3.0), (7.0, 4.0), (4.0, 8.0), (8.0, 8.0)].into_iter().enumerate() {
        let mut t = TrunkSpec::new(x, y, 0.2 + 0.1 * i as f64);
        t.noise_sigma = 0.005;
        trunks.push(t);
    }
    let scene = generate_plot(&SceneConfig {
        seed: 3,
        terrain: TerrainParams {
            extent: Extent::new(0.0, 0.0, 11.0, 11.0),
            amplitude: 0.3,
            slope: [0.12, 0.0],
            density: 2000.0,
            ..TerrainParams::default()
        },
        trunks,
    })?;

    let params = SmrfParams::default();
    let grid = rasterize_min_elevation(&scene.cloud, params.cell_size)?;
    let ground = smrf_surface(&grid, &params)?;
    let (ground_idx, above_idx) = classify_ground(&scene.cloud, &ground, params.height_threshold);

    let terrain_total = scene.labels.iter().filter(|l| l.is_none()).count();
    let terrain_hit = ground_idx.iter().filter(|&&i| scene.labels[i].is_none()).count();
    let trunk_high_as_ground = ground_idx
        .iter()
        .filter(|&&i| scene.labels[i].is_some() && ground.height_above_ground(&scene.cloud.points()[i]) > 1.0)
        .count();
    println!("{} points, {} ground, {} above ground", scene.cloud.len(), ground_idx.len(), above_idx.len());
    println!(
        "terrain recovered as ground: {terrain_hit}/{terrain_total} ({:.2}%)",
        100.0 * terrain_hit as f64 / terrain_total as f64
    );
    println!("trunk points above 1 m labelled ground: {trunk_high_as_ground}");

    // surface error against the analytic terrain at the cell centres
    let g = &ground.geometry;
    let mut worst: f64 = 0.0;
    for row in 0..g.nrows {
        for col in 0..g.ncols {
            let (x, y) = g.cell_center(col, row);
            worst = worst.max((ground.get(col, row) - scene.terrain.height(x, y)).abs());
        }
    }
    println!("largest surface deviation from true terrain: {:.1} cm", 100.0 * worst);
    Ok(())
}
