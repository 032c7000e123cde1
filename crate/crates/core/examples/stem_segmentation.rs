//! Trunk segmentation stage by stage on a small plot.
//!
//! Per-point normals and curvature come from k-nearest-neighbour PCA. Points
//! with near-horizontal normals and low curvature are trunk candidates; they
//! are grouped by Euclidean clustering, stacked fragments are merged, fused
//! stems are split, and each stem is completed from the unfiltered cloud.
//!
//! ```text
//! cargo run --release --example stem_segmentation
//! ```

use stemhull::cloud::build_spatial_index;
use stemhull::ground::{classify_ground, rasterize_min_elevation, smrf_surface, SmrfParams};
use stemhull::pipeline::SegmentConfig;
use stemhull::segment::{
    complete_stems, curvature_filter, estimate_features, euclidean_cluster, merge_stem_clusters, split_conjoined,
    verticality_filter, TrunkCluster,
};
use stemhull::synth::{generate_plot, Extent, SceneConfig, TerrainParams, TrunkSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut trunks = Vec::new();
    for (x, y, d) in [(2.0, 2.0, 0.18), (6.0, 2.5, 0.35), (3.5, 6.5, 0.5)] {
        let mut t = TrunkSpec::new(x, y, d);
        t.furrow_amplitude = 0.01;
        t.furrow_count = 20;
        t.noise_sigma = 0.005;
        t.density = 2000.0;
        trunks.push(t);
    }
    // two stems sharing a base
    for (x, d) in [(7.0, 0.2), (7.32, 0.2)] {
        let mut t = TrunkSpec::new(x, 7.0, d);
        t.conjoined = true;
        t.density = 2000.0;
        trunks.push(t);
    }
    let scene = generate_plot(&SceneConfig {
        seed: 5,
        terrain: TerrainParams { extent: Extent::new(0.0, 0.0, 9.0, 9.0), amplitude: 0.2, density: 1000.0, ..TerrainParams::default() },
        trunks,
    })?;
    println!("scene: {} points, {} trunks", scene.cloud.len(), scene.truth.len());

    let smrf = SmrfParams::default();
    let ground = smrf_surface(&rasterize_min_elevation(&scene.cloud, smrf.cell_size)?, &smrf)?;
    let (_, above) = classify_ground(&scene.cloud, &ground, smrf.height_threshold);
    let off = scene.cloud.select(&above);
    println!("above ground: {}", off.len());

    let seg = SegmentConfig::default();
    let features = estimate_features(&off, &build_spatial_index(&off), seg.k)?;
    let vertical = verticality_filter(&features, seg.max_normal_z);
    let smooth = curvature_filter(&features, seg.max_curvature);
    let keep: Vec<usize> = vertical.iter().copied().filter(|i| smooth.binary_search(i).is_ok()).collect();
    println!("vertical normals: {}, low curvature: {}, both: {}", vertical.len(), smooth.len(), keep.len());

    let points: Vec<_> = keep.iter().map(|&i| off.points()[i]).collect();
    let clusters: Vec<TrunkCluster> = euclidean_cluster(&points, seg.cluster_tolerance, seg.min_cluster_size)
        .into_iter()
        .filter_map(|m| TrunkCluster::from_indices(&scene.cloud, &ground, m.into_iter().map(|j| above[keep[j]]).collect()))
        .collect();
    println!("euclidean clusters: {}", clusters.len());
    let merged = merge_stem_clusters(clusters, seg.merge_xy_gap, seg.merge_z_overlap);
    println!("after fragment merge: {}", merged.len());
    let split: Vec<TrunkCluster> = merged.iter().flat_map(|c| split_conjoined(c, &scene.cloud, &ground, &seg.split)).collect();
    println!("after conjoined split: {}", split.len());
    let stems = complete_stems(split, &scene.cloud, &ground, &above, seg.completion_radius);
    for s in &stems {
        println!(
            "  stem at ({:.2}, {:.2}): {:>6} points, {:.2}–{:.2} m above ground",
            s.centroid.x, s.centroid.y, s.len(), s.base_height, s.top_height
        );
    }
    Ok(())
}
