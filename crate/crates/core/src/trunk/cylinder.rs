use nalgebra::{Matrix2, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FitError;
use crate::cloud::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    /// Inlier band half-width around the cylinder surface [m].
    pub dist_threshold: f64,
    /// Largest accepted axis tilt from vertical [rad].
    pub max_tilt: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            dist_threshold: 0.01,
            max_tilt: 20f64.to_radians(),
            iterations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderModel {
    pub axis_point: Point3,
    /// Unit length, `z ≥ 0`.
    pub axis_dir: Vector3<f64>,
    pub radius: f64,
    pub inlier_count: usize,
}

impl CylinderModel {
    pub fn distance_to_axis(&self, p: &Point3) -> f64 {
        let d = p - self.axis_point;
        (d - self.axis_dir * d.dot(&self.axis_dir)).norm()
    }

    pub fn tilt(&self) -> f64 {
        self.axis_dir.z.clamp(-1.0, 1.0).acos()
    }
}

/// Orthonormal pair spanning the plane orthogonal to `dir`.
pub(crate) fn plane_basis(dir: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if dir.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = dir.cross(&helper).normalize();
    let v = dir.cross(&u);
    (u, v)
}

/// Candidate cylinder through two oriented samples, or `None` when the pair
/// does not define one.
fn candidate(p1: &Point3, n1: &Vector3<f64>, p2: &Point3, n2: &Vector3<f64>, max_tilt: f64) -> Option<CylinderModel> {
    let mut dir = n1.cross(n2);
    let len = dir.norm();
    if len < 1e-6 {
        return None;
    }
    dir /= len;
    if dir.z < 0.0 {
        dir = -dir;
    }
    if dir.z.clamp(-1.0, 1.0).acos() > max_tilt {
        return None;
    }
    let (u, v) = plane_basis(&dir);
    let proj = |w: &Vector3<f64>| Vector2::new(w.dot(&u), w.dot(&v));
    let (a, b) = (proj(&p1.coords), proj(&p2.coords));
    let (da, db) = (proj(n1), proj(n2));
    // a + s·da = b + t·db
    let m = Matrix2::new(da.x, -db.x, da.y, -db.y);
    let st = m.try_inverse()? * (b - a);
    let center = a + da * st.x;
    let radius = 0.5 * ((a - center).norm() + (b - center).norm());
    if !(radius > 0.0 && radius.is_finite()) {
        return None;
    }
    Some(CylinderModel {
        axis_point: Point3::from(u * center.x + v * center.y),
        axis_dir: dir,
        radius,
        inlier_count: 0,
    })
}

/// RANSAC cylinder from oriented points; deterministic for a fixed seed.
///
/// Each iteration samples two point/normal pairs, takes the axis along the
/// cross product of the normals and the axis position where the two normal
/// lines meet in the orthogonal plane. The candidate with the most inliers
/// wins (ties go to the lower summed residual) and its radius is replaced by
/// the mean inlier distance to the axis.
pub fn ransac_cylinder(points: &[Point3], normals: &[Vector3<f64>], cfg: &RansacConfig) -> Result<CylinderModel, FitError> {
    if points.len() < 2 {
        return Err(FitError::TooFewPoints { needed: 2, got: points.len() });
    }
    if normals.len() != points.len() {
        return Err(FitError::Argument(format!("{} normals for {} points", normals.len(), points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = points.len();
    let mut best: Option<(CylinderModel, f64)> = None;
    for _ in 0..cfg.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let Some(mut model) = candidate(&points[i], &normals[i], &points[j], &normals[j], cfg.max_tilt) else {
            continue;
        };
        let mut count = 0;
        let mut residual = 0.0;
        for p in points {
            let r = (model.distance_to_axis(p) - model.radius).abs();
            if r <= cfg.dist_threshold {
                count += 1;
                residual += r;
            }
        }
        model.inlier_count = count;
        let better = match &best {
            None => true,
            Some((b, res)) => count > b.inlier_count || (count == b.inlier_count && residual < *res),
        };
        if better {
            best = Some((model, residual));
        }
    }
    let (mut model, _) = best.filter(|(m, _)| m.inlier_count >= 3).ok_or(FitError::NoModel("no cylinder candidate with ≥ 3 inliers".into()))?;
    let (sum, count) = points.iter().fold((0.0, 0usize), |(s, c), p| {
        let d = model.distance_to_axis(p);
        if (d - model.radius).abs() <= cfg.dist_threshold {
            (s + d, c + 1)
        } else {
            (s, c)
        }
    });
    model.radius = sum / count as f64;
    Ok(model)
}
