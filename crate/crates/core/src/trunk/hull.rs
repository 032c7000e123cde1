use nalgebra::Point2;

use super::FitError;

/// Strictly convex polygon, vertices counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPolygon {
    vertices: Vec<Point2<f64>>,
}

#[inline]
fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl HullPolygon {
    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn perimeter(&self) -> f64 {
        let v = &self.vertices;
        (0..v.len()).map(|i| (v[(i + 1) % v.len()] - v[i]).norm()).sum()
    }

    /// Shoelace area, positive for counter-clockwise order.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        0.5 * (0..v.len())
            .map(|i| {
                let (a, b) = (&v[i], &v[(i + 1) % v.len()]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    /// Inside or on the boundary, with slack `tol` in cross-product units.
    pub fn contains(&self, p: &Point2<f64>, tol: f64) -> bool {
        let v = &self.vertices;
        (0..v.len()).all(|i| cross(&v[i], &v[(i + 1) % v.len()], p) >= -tol)
    }
}

/// Andrew's monotone chain. Collinear boundary points are not kept.
pub fn convex_hull(points: &[Point2<f64>]) -> Result<HullPolygon, FitError> {
    if points.len() < 3 {
        return Err(FitError::DegenerateHull(format!("need ≥ 3 points, got {}", points.len())));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    sorted.dedup();

    let mut hull: Vec<Point2<f64>> = Vec::with_capacity(sorted.len() + 1);
    for p in &sorted {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(FitError::DegenerateHull("points are collinear".into()));
    }
    Ok(HullPolygon { vertices: hull })
}

/// Girth-tape diameter: hull perimeter over π.
pub fn hull_dbh(hull: &HullPolygon) -> f64 {
    hull.perimeter() / std::f64::consts::PI
}
