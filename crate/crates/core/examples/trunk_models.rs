//! Cylinder, ellipse and convex-hull DBH on furrowed trunks.
//!
//! Model fits average over bark furrows and read low against a girth tape;
//! the hull follows the ridges the tape rests on. Each trunk is a full
//! synthetic stem run through the same estimator the inventory uses.
//!
//! ```text
//! cargo run --release --example trunk_models
//! ```

use stemhull::cloud::build_spatial_index;
use stemhull::ground::GroundModel;
use stemhull::segment::{estimate_features, TrunkCluster};
use stemhull::synth::{generate_trunk, Extent, TerrainParams, TrunkSpec};
use stemhull::trunk::{estimate_dbh, DbhConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let terrain = TerrainParams { extent: Extent::new(-2.0, -2.0, 2.0, 2.0), ..TerrainParams::default() };
    let ground = GroundModel::flat(0.0);
    println!(
        "{:>5} {:>5} {:>3} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "d_cm", "A_cm", "m", "truth", "hull", "cylinder", "ellipse", "final"
    );
    for (i, (d, a, m)) in [(0.25, 0.01, 18), (0.40, 0.02, 24), (0.55, 0.03, 30)].into_iter().enumerate() {
        let mut spec = TrunkSpec::new(0.0, 0.0, d);
        spec.height = 2.0;
        spec.furrow_amplitude = a;
        spec.furrow_count = m;
        spec.noise_sigma = 0.005;
        spec.density = 2000.0;
        let (cloud, truth) = generate_trunk(i, &spec, &terrain, 7 + i as u64);
        let features = estimate_features(&cloud, &build_spatial_index(&cloud), 16)?;
        let cluster = TrunkCluster::from_indices(&cloud, &ground, (0..cloud.len()).collect()).expect("non-empty trunk");
        let e = estimate_dbh(i, &cluster, &cloud, &ground, Some(&features.normals), &DbhConfig::default())?;
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!(
            "{:>5.0} {:>5.0} {:>3} {:>9.2} {:>9} {:>9} {:>9} {:>9.2}  ({})",
            100.0 * d,
            100.0 * a,
            m,
            truth.dbh_cm,
            cell(e.dbh_hull),
            cell(e.dbh_cylinder),
            cell(e.dbh_ellipse),
            e.dbh_final,
            e.method_used
        );
    }
    Ok(())
}
