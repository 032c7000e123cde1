use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use super::SegmentError;
use crate::cloud::{Point3, PointCloud, SpatialIndex};

/// Per-point surface normal and curvature from local covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatures {
    pub normals: Vec<Vector3<f64>>,
    /// `λ_min / (λ1 + λ2 + λ3)`, in `[0, 1/3]`.
    pub curvature: Vec<f64>,
    /// Neighborhood had zero total variance; normal defaulted to +z.
    pub degenerate: Vec<bool>,
    pub k: usize,
}

impl PointFeatures {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Features restricted to `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointFeatures {
        PointFeatures {
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            curvature: indices.iter().map(|&i| self.curvature[i]).collect(),
            degenerate: indices.iter().map(|&i| self.degenerate[i]).collect(),
            k: self.k,
        }
    }
}

/// Covariance of a point set about its centroid.
pub(crate) fn covariance<'a>(points: impl Iterator<Item = &'a Point3> + Clone) -> (Point3, Matrix3<f64>) {
    let mut n = 0usize;
    let mut sum = Vector3::zeros();
    for p in points.clone() {
        sum += p.coords;
        n += 1;
    }
    let mean = sum / n.max(1) as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    (Point3::from(mean), cov / n.max(1) as f64)
}

/// Eigen pairs of a symmetric 3×3 matrix sorted by ascending eigenvalue.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.map(|i| eig.eigenvalues[i].max(0.0));
    let vecs = order.map(|i| eig.eigenvectors.column(i).into_owned());
    (vals, vecs)
}

fn local_feature(cov: Matrix3<f64>) -> (Vector3<f64>, f64, bool) {
    let total = cov.trace();
    if !(total > 1e-300) {
        return (Vector3::z(), 0.0, true);
    }
    let (vals, vecs) = sorted_eigen(cov);
    let mut normal = vecs[0].normalize();
    if normal.z < 0.0 {
        normal = -normal;
    }
    let curvature = (vals[0] / (vals[0] + vals[1] + vals[2])).clamp(0.0, 1.0 / 3.0);
    (normal, curvature, false)
}

pub fn estimate_features(cloud: &PointCloud, index: &SpatialIndex, k: usize) -> Result<PointFeatures, SegmentError> {
    if k < 3 {
        return Err(SegmentError::Argument(format!("feature neighborhood k must be ≥ 3, got {k}")));
    }
    if cloud.len() < k {
        return Err(SegmentError::Argument(format!(
            "cloud has {} points, fewer than neighborhood k = {k}",
            cloud.len()
        )));
    }
    let pts = cloud.points();
    let per_point: Vec<(Vector3<f64>, f64, bool)> = pts
        .par_iter()
        .map(|p| {
            let nb = index.knn(p, k).expect("k ≥ 3");
            let (_, cov) = covariance(nb.iter().map(|&i| &pts[i]));
            local_feature(cov)
        })
        .collect();
    let mut features = PointFeatures {
        normals: Vec::with_capacity(pts.len()),
        curvature: Vec::with_capacity(pts.len()),
        degenerate: Vec::with_capacity(pts.len()),
        k,
    };
    for (n, c, d) in per_point {
        features.normals.push(n);
        features.curvature.push(c);
        features.degenerate.push(d);
    }
    Ok(features)
}
