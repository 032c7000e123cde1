//! DBH from a trunk scanned on one side only.
//!
//! With a 120° arc of bark visible, the hull of the section is a chord-closed
//! sliver and reads far below truth. The estimator flags the tree as partial
//! (a large angular gap around the section) and the max rule falls back on
//! the cylinder, whose radius is constrained by the visible curvature.
//!
//! ```text
//! cargo run --release --example partial_coverage
//! ```

use stemhull::cloud::build_spatial_index;
use stemhull::ground::GroundModel;
use stemhull::segment::{estimate_features, TrunkCluster};
use stemhull::synth::{generate_trunk, Extent, TerrainParams, TrunkSpec};
use stemhull::trunk::{estimate_dbh, DbhConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let terrain = TerrainParams { extent: Extent::new(-2.0, -2.0, 2.0, 2.0), ..TerrainParams::default() };
    let ground = GroundModel::flat(0.0);
    for arc_deg in [360.0f64, 240.0, 120.0] {
        let mut spec = TrunkSpec::new(0.0, 0.0, 0.30);
        spec.height = 2.0;
        spec.noise_sigma = 0.002;
        spec.density = 6000.0;
        spec.coverage_arc = arc_deg.to_radians();
        let (cloud, truth) = generate_trunk(0, &spec, &terrain, 11);
        let features = estimate_features(&cloud, &build_spatial_index(&cloud), 16)?;
        let cluster = TrunkCluster::from_indices(&cloud, &ground, (0..cloud.len()).collect()).expect("non-empty trunk");
        let e = estimate_dbh(0, &cluster, &cloud, &ground, Some(&features.normals), &DbhConfig::default())?;
        println!(
            "arc {arc_deg:>3.0}°: truth {:.2} cm, hull {:>6.2}, cylinder {:>6.2}, final {:.2} via {} [{:?}]",
            truth.dbh_cm,
            e.dbh_hull.unwrap_or(f64::NAN),
            e.dbh_cylinder.unwrap_or(f64::NAN),
            e.dbh_final,
            e.method_used,
            e.coverage_flag
        );
    }
    Ok(())
}
