//! Girth-tape DBH from a convex hull.
//!
//! A taut tape around a trunk spans concave bark furrows, so its reading is
//! the perimeter of the convex hull of the cross-section divided by π. This
//! example compares that reading with the circle-equivalent diameters of a
//! smooth and a furrowed section.
//!
//! ```text
//! cargo run --release --example convex_hull_dbh
//! ```

use std::f64::consts::{PI, TAU};

use nalgebra::Point2;
use stemhull::synth::girth_truth;
use stemhull::trunk::{convex_hull, hull_dbh};

/// Boundary of `r(θ) = d/2 + a·sin(mθ)` sampled at `n` angles.
fn section(d: f64, a: f64, m: u32, n: usize) -> Vec<Point2<f64>> {
    (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let r = d / 2.0 + a * (m as f64 * t).sin();
            Point2::new(r * t.cos(), r * t.sin())
        })
        .collect()
}

/// Shoelace area of a simple polygon.
fn polygon_area(p: &[Point2<f64>]) -> f64 {
    let n = p.len();
    (0..n).map(|i| p[i].x * p[(i + 1) % n].y - p[(i + 1) % n].x * p[i].y).sum::<f64>().abs() / 2.0
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>6} {:>6} {:>4} {:>10} {:>10} {:>10}", "d_cm", "a_cm", "m", "hull_cm", "truth_cm", "area_eq_cm");
    for (d, a, m) in [(0.30, 0.0, 0), (0.30, 0.01, 12), (0.30, 0.02, 24), (0.60, 0.03, 20)] {
        let pts = section(d, a, m, 20_000);
        let hull = convex_hull(&pts)?;
        // diameter of the circle with the section's own area, which is what
        // a fitted circle tends towards on a furrowed stem
        let area_eq = 2.0 * (polygon_area(&pts) / PI).sqrt();
        println!(
            "{:>6.1} {:>6.1} {:>4} {:>10.3} {:>10.3} {:>10.3}",
            100.0 * d,
            100.0 * a,
            m,
            100.0 * hull_dbh(&hull),
            100.0 * girth_truth(d, a, m, 0.0),
            100.0 * area_eq
        );
    }
    Ok(())
}
