use nalgebra::{Matrix3, Point2, Rotation3, Vector3};

use super::hull::convex_hull;
use crate::cloud::{Point3, PointCloud};
use crate::ground::GroundModel;
use crate::segment::{covariance, dbscan, sorted_eigen, DbscanParams, TrunkCluster};

pub const BREAST_HEIGHT: f64 = 1.3;
pub const CROP_LOW: f64 = 1.0;
pub const CROP_HIGH: f64 = 1.6;

/// One horizontal band of a stem.
#[derive(Debug, Clone, PartialEq)]
pub struct TrunkSlice {
    pub cluster_id: usize,
    /// Band `[z_lo, z_hi)` in meters above ground.
    pub z_lo: f64,
    pub z_hi: f64,
    pub points: Vec<Point3>,
    /// Per-point surface normals when available; they drive the axis estimate.
    pub normals: Option<Vec<Vector3<f64>>>,
    /// Axis-aligned, centered 2D projection; empty until oriented.
    pub oriented_2d: Vec<Point2<f64>>,
    /// Points per m² of oriented hull area, 0 when the hull is degenerate.
    pub density: f64,
    pub degenerate: bool,
}

impl TrunkSlice {
    pub fn new(cluster_id: usize, z_lo: f64, z_hi: f64, points: Vec<Point3>, normals: Option<Vec<Vector3<f64>>>) -> Self {
        TrunkSlice {
            cluster_id,
            z_lo,
            z_hi,
            points,
            normals,
            oriented_2d: Vec::new(),
            density: 0.0,
            degenerate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xy_centroid(&self) -> Option<Point2<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.points.len() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Some(Point2::new(sx / n, sy / n))
    }
}

/// Lower bound of band `k`. Dividing by the reciprocal keeps decimal
/// boundaries such as 1.2 m exact for thicknesses like 0.2 m.
pub fn slice_bound(k: i64, thickness: f64) -> f64 {
    k as f64 / thickness.recip()
}

/// Slice index of a height under half-open bands of `thickness` starting at 0.
pub fn slice_index(h: f64, thickness: f64) -> i64 {
    let mut k = (h * thickness.recip()).floor() as i64;
    // keep the index consistent with slice_bound
    if h < slice_bound(k, thickness) {
        k -= 1;
    } else if h >= slice_bound(k + 1, thickness) {
        k += 1;
    }
    k
}

/// Member indices of `cluster` with height above ground in `[lo, hi]`.
pub fn crop_breast_height(cluster: &TrunkCluster, cloud: &PointCloud, ground: &GroundModel) -> Vec<usize> {
    crop_band(cluster, cloud, ground, CROP_LOW, CROP_HIGH)
}

pub(crate) fn crop_band(cluster: &TrunkCluster, cloud: &PointCloud, ground: &GroundModel, lo: f64, hi: f64) -> Vec<usize> {
    let pts = cloud.points();
    cluster
        .indices
        .iter()
        .copied()
        .filter(|&i| {
            let h = ground.height_above_ground(&pts[i]);
            (lo..=hi).contains(&h)
        })
        .collect()
}

/// Partitions a stem into bands `[k·t, (k+1)·t)` above ground. Empty bands
/// are omitted; slices come out in ascending height.
pub fn slice_trunk(
    cluster_id: usize,
    cluster: &TrunkCluster,
    cloud: &PointCloud,
    ground: &GroundModel,
    normals: Option<&[Vector3<f64>]>,
    thickness: f64,
) -> Vec<TrunkSlice> {
    let pts = cloud.points();
    let mut keyed: Vec<(i64, usize)> = cluster
        .indices
        .iter()
        .map(|&i| (slice_index(ground.height_above_ground(&pts[i]), thickness), i))
        .collect();
    keyed.sort_unstable();
    let mut slices = Vec::new();
    for group in keyed.chunk_by(|a, b| a.0 == b.0) {
        let k = group[0].0;
        let members: Vec<usize> = group.iter().map(|&(_, i)| i).collect();
        slices.push(TrunkSlice::new(
            cluster_id,
            slice_bound(k, thickness),
            slice_bound(k + 1, thickness),
            members.iter().map(|&i| pts[i]).collect(),
            normals.map(|n| members.iter().map(|&i| n[i]).collect()),
        ));
    }
    slices
}

/// Stem axis as the direction orthogonal to all surface normals: the
/// eigenvector of the smallest eigenvalue of `Σ n nᵀ`. `None` when the
/// normals do not span a plane well enough to pin the axis.
pub fn axis_from_normals(normals: &[Vector3<f64>]) -> Option<Vector3<f64>> {
    if normals.len() < 3 {
        return None;
    }
    let scatter = normals.iter().fold(Matrix3::zeros(), |s, n| s + n * n.transpose());
    let (vals, vecs) = sorted_eigen(scatter);
    if vals[1] < 0.02 * vals[2] {
        return None;
    }
    let mut axis = vecs[0].normalize();
    if axis.z < 0.0 {
        axis = -axis;
    }
    Some(axis)
}

/// Stem axis from point spread alone: the covariance eigenvector whose
/// eigenvalue stands apart from the other two (the long axis of an elongated
/// slice, the short axis of a squat ring).
fn axis_from_spread(vals: &[f64; 3], vecs: &[Vector3<f64>; 3]) -> Vector3<f64> {
    let low_gap = vals[1] - vals[0];
    let high_gap = vals[2] - vals[1];
    let mut axis = if high_gap >= low_gap { vecs[2] } else { vecs[0] }.normalize();
    if axis.z < 0.0 {
        axis = -axis;
    }
    axis
}

/// Rotates and centers `points` so that `axis` maps to +z; returns xy.
pub fn project_along_axis(points: &[Point3], axis: &Vector3<f64>) -> Vec<Point2<f64>> {
    let (centroid, _) = covariance(points.iter());
    let rot = Rotation3::rotation_between(axis, &Vector3::z()).unwrap_or_else(Rotation3::identity);
    points
        .iter()
        .map(|p| {
            let q = rot * (p - centroid);
            Point2::new(q.x, q.y)
        })
        .collect()
}

/// Aligns the slice axis with +z and fills `oriented_2d` and `density`.
///
/// Coplanar or collinear slices keep their raw centered xy and are flagged
/// degenerate.
pub fn orient_slice(mut slice: TrunkSlice) -> TrunkSlice {
    if slice.points.is_empty() {
        slice.degenerate = true;
        return slice;
    }
    let (centroid, cov) = covariance(slice.points.iter());
    let (vals, vecs) = sorted_eigen(cov);
    let total = vals.iter().sum::<f64>();
    if slice.points.len() < 3 || vals[0] <= 1e-12 * total || total <= 0.0 {
        slice.degenerate = true;
        slice.oriented_2d = slice.points.iter().map(|p| Point2::new(p.x - centroid.x, p.y - centroid.y)).collect();
    } else {
        let axis = slice
            .normals
            .as_deref()
            .and_then(axis_from_normals)
            .unwrap_or_else(|| axis_from_spread(&vals, &vecs));
        slice.oriented_2d = project_along_axis(&slice.points, &axis);
    }
    slice.density = planar_density(&slice.oriented_2d);
    slice
}

pub(crate) fn planar_density(points: &[Point2<f64>]) -> f64 {
    match convex_hull(points) {
        Ok(h) if h.area() > 0.0 => points.len() as f64 / h.area(),
        _ => 0.0,
    }
}

/// DBSCAN `min_pts` from slice density: a quarter of the expected population
/// of an ε-disk, clamped to `[5, 40]`.
pub fn derive_min_pts(density: f64, eps: f64) -> usize {
    let expected = 0.25 * density.max(0.0) * std::f64::consts::PI * eps * eps;
    (expected.round() as usize).clamp(5, 40)
}

/// Keeps the largest DBSCAN cluster of the oriented projection. An empty
/// result means every point was noise.
pub fn denoise_slice(slice: &TrunkSlice, eps: f64) -> Vec<Point2<f64>> {
    let min_pts = derive_min_pts(slice.density, eps);
    denoise_points(&slice.oriented_2d, eps, min_pts)
}

pub(crate) fn denoise_points(points: &[Point2<f64>], eps: f64, min_pts: usize) -> Vec<Point2<f64>> {
    let coords: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
    let labels = dbscan(&coords, &DbscanParams { eps, min_pts });
    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    if count == 0 {
        return Vec::new();
    }
    let mut sizes = vec![0usize; count];
    for l in labels.iter().flatten() {
        sizes[*l] += 1;
    }
    // largest cluster, lowest id on ties
    let keep = (0..count).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).expect("non-empty");
    points.iter().zip(&labels).filter(|(_, l)| **l == Some(keep)).map(|(p, _)| *p).collect()
}
