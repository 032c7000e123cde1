//! Point cloud round trip through binary PLY, ASCII PLY and XYZ text, plus
//! k-d tree neighbourhood queries on the loaded cloud.
//!
//! ```text
//! cargo run --release --example point_cloud_io
//! ```

use stemhull::cloud::{build_spatial_index, read_point_cloud, write_point_cloud, CloudFormat, Point3, PointCloud};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a 40 × 40 grid on a gentle dome
    let points: Vec<Point3> = (0..1600)
        .map(|i| {
            let (x, y) = ((i % 40) as f64 * 0.05, (i / 40) as f64 * 0.05);
            Point3::new(x, y, 0.2 - 0.05 * ((x - 1.0).powi(2) + (y - 1.0).powi(2)))
        })
        .collect();
    let cloud = PointCloud::new(points);
    let dir = tempfile::tempdir()?;

    for (name, format) in [
        ("cloud.ply", CloudFormat::Ply),
        ("cloud_ascii.ply", CloudFormat::PlyAscii),
        ("cloud.xyz", CloudFormat::XyzText),
    ] {
        let path = dir.path().join(name);
        write_point_cloud(&cloud, &path, format)?;
        let back = read_point_cloud(&path, CloudFormat::from_path(&path).expect("known extension"))?;
        let exact = back.cloud.points() == cloud.points();
        println!(
            "{name:<16} {:>7} bytes  {} points  exact round trip: {exact}",
            std::fs::metadata(&path)?.len(),
            back.cloud.len()
        );
    }

    let index = build_spatial_index(&cloud);
    let centre = Point3::new(1.0, 1.0, 0.2);
    let near = index.radius_search(&centre, 0.12)?;
    let knn = index.knn(&centre, 5)?;
    println!("points within 12 cm of the dome top: {}", near.len());
    println!("5 nearest: {knn:?}");
    if let Some((x0, y0, x1, y1)) = cloud.xy_bounds() {
        println!("xy extent: [{x0:.2}, {x1:.2}] × [{y0:.2}, {y1:.2}] m");
    }
    Ok(())
}
