use std::cmp::Ordering;

use nalgebra::Point2;

fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Graham scan: counter-clockwise hull vertices, collinear points dropped.
///
/// Kept separate from the measurement hull so that scene truth does not
/// share code with the estimator it is used to check.
pub fn graham_hull(points: &[Point2<f64>]) -> Vec<Point2<f64>> {
    let Some(pivot) = points
        .iter()
        .copied()
        .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
    else {
        return Vec::new();
    };
    let mut rest: Vec<Point2<f64>> = points.iter().copied().filter(|p| *p != pivot).collect();
    rest.sort_by(|a, b| {
        let c = cross(&pivot, a, b);
        if c > 0.0 {
            Ordering::Less
        } else if c < 0.0 {
            Ordering::Greater
        } else {
            (a - pivot).norm_squared().total_cmp(&(b - pivot).norm_squared())
        }
    });
    // the closing ray is walked outside-in so its inner points get dropped
    if let Some(last) = rest.last().copied() {
        let run = rest.iter().rev().take_while(|p| cross(&pivot, p, &last) == 0.0).count();
        let start = rest.len() - run;
        rest[start..].reverse();
    }
    let mut hull = vec![pivot];
    for p in rest {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    while hull.len() >= 3 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &pivot) <= 0.0 {
        hull.pop();
    }
    hull
}

pub(crate) fn perimeter(vertices: &[Point2<f64>]) -> f64 {
    (0..vertices.len())
        .map(|i| (vertices[(i + 1) % vertices.len()] - vertices[i]).norm())
        .sum()
}
