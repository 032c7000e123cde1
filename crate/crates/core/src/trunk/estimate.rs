use nalgebra::{Point2, Vector3};
use serde::{Deserialize, Serialize};

use super::cylinder::{ransac_cylinder, RansacConfig};
use super::ellipse::ls_ellipse;
use super::hull::{convex_hull, hull_dbh, HullPolygon};
use super::slice::{crop_breast_height, denoise_slice, orient_slice, slice_bound, slice_index, TrunkSlice, BREAST_HEIGHT};
use crate::cloud::PointCloud;
use crate::ground::GroundModel;
use crate::segment::TrunkCluster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbhMethod {
    Hull,
    Cylinder,
    Ellipse,
}

impl DbhMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DbhMethod::Hull => "hull",
            DbhMethod::Cylinder => "cylinder",
            DbhMethod::Ellipse => "ellipse",
        }
    }
}

impl std::fmt::Display for DbhMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether the scan wraps the whole stem at breast height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    Full,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbhConfig {
    /// Height of each hull slice [m].
    pub slice_thickness: f64,
    /// DBSCAN radius for slice denoising [m].
    pub denoise_eps: f64,
    /// Largest angular gap in the measured cross-section before the
    /// estimate is flagged partial [rad].
    pub max_coverage_gap: f64,
    pub ransac: RansacConfig,
}

impl Default for DbhConfig {
    fn default() -> Self {
        DbhConfig {
            slice_thickness: 0.2,
            denoise_eps: 0.02,
            max_coverage_gap: std::f64::consts::FRAC_PI_2,
            ransac: RansacConfig::default(),
        }
    }
}

/// Per-tree diameter measurements, all diameters in centimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbhEstimate {
    pub tree_id: usize,
    /// Stem center at breast height [m].
    pub stem_location: Point2<f64>,
    pub dbh_hull: Option<f64>,
    pub dbh_cylinder: Option<f64>,
    pub dbh_ellipse: Option<f64>,
    /// Largest of the available per-method diameters.
    pub dbh_final: f64,
    pub method_used: DbhMethod,
    pub coverage_flag: Coverage,
}

impl DbhEstimate {
    pub fn method_value(&self, method: DbhMethod) -> Option<f64> {
        match method {
            DbhMethod::Hull => self.dbh_hull,
            DbhMethod::Cylinder => self.dbh_cylinder,
            DbhMethod::Ellipse => self.dbh_ellipse,
        }
    }
}

/// A detected stem for which no model could be fitted.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("tree {tree_id}: detection only ({reason})")]
pub struct DetectionOnly {
    pub tree_id: usize,
    pub stem_location: Point2<f64>,
    pub reason: String,
}

/// Largest angle between consecutive points seen from `center`.
fn largest_angular_gap(points: &[Point2<f64>], center: &Point2<f64>) -> f64 {
    let mut angles: Vec<f64> = points
        .iter()
        .map(|p| (p.y - center.y).atan2(p.x - center.x))
        .collect();
    if angles.len() < 2 {
        return std::f64::consts::TAU;
    }
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + std::f64::consts::TAU - angles[angles.len() - 1];
    angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

fn area_centroid(hull: &HullPolygon) -> Point2<f64> {
    let v = hull.vertices();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..v.len() {
        let (p, q) = (v[i], v[(i + 1) % v.len()]);
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
        a2 += w;
    }
    Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
}

fn max_extent(hull: &HullPolygon) -> f64 {
    let v = hull.vertices();
    let mut best = 0.0f64;
    for (i, p) in v.iter().enumerate() {
        for q in &v[i + 1..] {
            best = best.max((p - q).norm());
        }
    }
    best
}

/// Oriented, denoised, hulled cross-section; `None` if any step fails.
fn hull_section(slice: TrunkSlice, eps: f64) -> Option<(HullPolygon, Vec<Point2<f64>>)> {
    let slice = orient_slice(slice);
    if slice.degenerate {
        return None;
    }
    let kept = denoise_slice(&slice, eps);
    let hull = convex_hull(&kept).ok()?;
    Some((hull, kept))
}

/// The denoised, oriented breast-height cross-section and its hull, as used
/// for `dbh_hull`; falls back to the full crop like [`estimate_dbh`].
pub fn breast_height_section(
    cluster: &TrunkCluster,
    cloud: &PointCloud,
    ground: &GroundModel,
    normals: Option<&[Vector3<f64>]>,
    cfg: &DbhConfig,
) -> Option<(Vec<Point2<f64>>, HullPolygon)> {
    let pts = cloud.points();
    let crop = crop_breast_height(cluster, cloud, ground);
    let k = slice_index(BREAST_HEIGHT, cfg.slice_thickness);
    let subset = |idx: &[usize]| {
        TrunkSlice::new(0, 0.0, 0.0, idx.iter().map(|&i| pts[i]).collect(), normals.map(|n| idx.iter().map(|&i| n[i]).collect()))
    };
    let members: Vec<usize> = crop
        .iter()
        .copied()
        .filter(|&i| slice_index(ground.height_above_ground(&pts[i]), cfg.slice_thickness) == k)
        .collect();
    hull_section(subset(&members), cfg.denoise_eps)
        .or_else(|| hull_section(subset(&crop), cfg.denoise_eps))
        .map(|(hull, kept)| (kept, hull))
}

/// Measures one stem at breast height with all three models.
///
/// `normals`, indexed like `cloud`, are required for the cylinder fit and
/// improve slice orientation. The RANSAC seed is mixed with `tree_id` so
/// trees draw independent samples while the whole run stays reproducible.
///
/// Model diameters larger than twice the extent of the breast-height
/// points are discarded as implausible: they come from near-degenerate fits
/// to short arcs, and the max rule would otherwise promote them.
pub fn estimate_dbh(
    tree_id: usize,
    cluster: &TrunkCluster,
    cloud: &PointCloud,
    ground: &GroundModel,
    normals: Option<&[Vector3<f64>]>,
    cfg: &DbhConfig,
) -> Result<DbhEstimate, DetectionOnly> {
    let pts = cloud.points();
    let crop = crop_breast_height(cluster, cloud, ground);
    let crop_slice = TrunkSlice::new(
        tree_id,
        super::CROP_LOW,
        super::CROP_HIGH,
        crop.iter().map(|&i| pts[i]).collect(),
        normals.map(|n| crop.iter().map(|&i| n[i]).collect()),
    );

    let k = slice_index(BREAST_HEIGHT, cfg.slice_thickness);
    let members: Vec<usize> = crop
        .iter()
        .copied()
        .filter(|&i| slice_index(ground.height_above_ground(&pts[i]), cfg.slice_thickness) == k)
        .collect();
    let bh_slice = TrunkSlice::new(
        tree_id,
        slice_bound(k, cfg.slice_thickness),
        slice_bound(k + 1, cfg.slice_thickness),
        members.iter().map(|&i| pts[i]).collect(),
        normals.map(|n| members.iter().map(|&i| n[i]).collect()),
    );

    let stem_location = bh_slice.xy_centroid()
        .or_else(|| crop_slice.xy_centroid())
        .unwrap_or(Point2::new(cluster.centroid.x, cluster.centroid.y));
    let detection_only = |reason: &str| DetectionOnly {
        tree_id,
        stem_location,
        reason: reason.to_string(),
    };
    if crop.is_empty() {
        return Err(detection_only("no points between 1.0 and 1.6 m"));
    }

    let oriented_crop = orient_slice(crop_slice.clone());
    let extent = convex_hull(&oriented_crop.oriented_2d).ok().map(|h| max_extent(&h));
    let plausible = |d: f64| d.is_finite() && d > 0.0 && extent.is_none_or(|e| d <= 2.0 * e);

    let mut coverage = Coverage::Full;
    let section = match hull_section(bh_slice, cfg.denoise_eps) {
        Some(s) => Some(s),
        None => {
            coverage = Coverage::Partial;
            hull_section(crop_slice.clone(), cfg.denoise_eps)
        }
    };
    let dbh_hull = section.map(|(hull, kept)| {
        if largest_angular_gap(&kept, &area_centroid(&hull)) > cfg.max_coverage_gap {
            coverage = Coverage::Partial;
        }
        hull_dbh(&hull)
    });

    let dbh_cylinder = normals.and_then(|_| {
        let ransac = RansacConfig {
            seed: cfg.ransac.seed ^ (tree_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..cfg.ransac
        };
        let n = crop_slice.normals.as_deref()?;
        ransac_cylinder(&crop_slice.points, n, &ransac).ok().map(|m| 2.0 * m.radius)
    });

    let dbh_ellipse = if oriented_crop.degenerate {
        None
    } else {
        ls_ellipse(&oriented_crop.oriented_2d).ok().map(|e| e.mean_diameter())
    };

    let to_cm = |d: Option<f64>| d.filter(|&d| plausible(d)).map(|d| d * 100.0);
    let (dbh_hull, dbh_cylinder, dbh_ellipse) = (to_cm(dbh_hull), to_cm(dbh_cylinder), to_cm(dbh_ellipse));
    let (method_used, dbh_final) = [
        (DbhMethod::Hull, dbh_hull),
        (DbhMethod::Cylinder, dbh_cylinder),
        (DbhMethod::Ellipse, dbh_ellipse),
    ]
    .into_iter()
    .filter_map(|(m, v)| v.map(|v| (m, v)))
    .fold(None, |best: Option<(DbhMethod, f64)>, (m, v)| match best {
        Some((_, b)) if b >= v => best,
        _ => Some((m, v)),
    })
    .ok_or_else(|| detection_only("no model could be fitted"))?;

    Ok(DbhEstimate {
        tree_id,
        stem_location,
        dbh_hull,
        dbh_cylinder,
        dbh_ellipse,
        dbh_final,
        method_used,
        coverage_flag: coverage,
    })
}
