//! Matching estimates to reference trees and the bias / RMSE / Std metrics.
//!
//! Estimates are paired greedily with the nearest unclaimed reference within
//! the matching radius. Residuals are estimate minus reference, and the
//! three statistics obey `rmse² = bias² + ((n−1)/n)·std²`, which this example
//! also uses to cross-check a published result table.
//!
//! ```text
//! cargo run --release --example evaluate_metrics
//! ```

use nalgebra::Point2;
use stemhull::metrics::{bias, report, rmse, stddev, MatchConfig, Method, ReferenceTree};
use stemhull::trunk::{Coverage, DbhEstimate, DbhMethod};

fn estimate(id: usize, x: f64, y: f64, hull: f64, cyl: f64) -> DbhEstimate {
    DbhEstimate {
        tree_id: id,
        stem_location: Point2::new(x, y),
        dbh_hull: Some(hull),
        dbh_cylinder: Some(cyl),
        dbh_ellipse: None,
        dbh_final: hull.max(cyl),
        method_used: if hull >= cyl { DbhMethod::Hull } else { DbhMethod::Cylinder },
        coverage_flag: Coverage::Full,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let refs: Vec<ReferenceTree> = [("A", 0.0, 0.0, 30.0), ("B", 4.0, 0.0, 22.5), ("C", 0.0, 5.0, 41.0), ("D", 9.0, 9.0, 15.0)]
        .into_iter()
        .map(|(id, x, y, d)| ReferenceTree { tree_id: id.into(), location: Point2::new(x, y), dbh: d })
        .collect();
    let estimates = vec![
        estimate(0, 0.1, 0.05, 31.2, 28.9),
        estimate(1, 4.2, -0.1, 22.0, 21.1),
        estimate(2, 0.05, 5.1, 42.6, 39.0),
        // a detection far from every reference
        estimate(3, 15.0, 2.0, 12.0, 11.0),
    ];
    let rep = report(&estimates, &refs, &MatchConfig::default())?;
    for p in &rep.pairs {
        println!("tree {} ↔ {} at {:.2} m: final residual {:+.2} cm", p.estimate.tree_id, p.reference.tree_id, p.distance, p.estimate.dbh_final - p.reference.dbh);
    }
    println!(
        "unmatched estimates {:?}, unmatched references {:?}",
        rep.unmatched_estimates.iter().map(|e| e.tree_id).collect::<Vec<_>>(),
        rep.unmatched_references.iter().map(|r| r.tree_id.as_str()).collect::<Vec<_>>()
    );
    for m in Method::ALL {
        let mm = rep.method(m);
        println!("{:<9} n {}  bias {:?}  rmse {:?}  std {:?}", m.as_str(), mm.n, mm.bias, mm.rmse, mm.std);
    }

    // worked example: residuals (2, −1, 3)
    let r = [2.0, -1.0, 3.0];
    println!("residuals {r:?}: bias {:.4}, rmse {:.4}, std {:.4}", bias(&r)?, rmse(&r)?, stddev(&r)?);

    // a printed table gives (bias, rmse, std, n) rounded to 0.01 cm; the
    // identity recovers the rmse from the other three
    let (b, printed_rmse, sd, n): (f64, f64, f64, f64) = (0.28, 1.26, 1.29, 11.0);
    let implied = (b * b + (n - 1.0) / n * sd * sd).sqrt();
    println!("bias {b}, std {sd}, n {n}: printed rmse {printed_rmse:.2}, implied {implied:.3}");
    Ok(())
}
