//! Trunk segmentation: foliage removal by normal and curvature filters, then
//! grouping of trunk points into per-stem clusters.

mod cluster;
mod dbscan;
mod features;

use crate::cloud::{KdTree, PointCloud};
use crate::ground::GroundModel;

pub use cluster::{euclidean_cluster, merge_stem_clusters, TrunkCluster};
pub use dbscan::{dbscan, DbscanParams};
pub use features::{estimate_features, PointFeatures};
pub(crate) use features::{covariance, sorted_eigen};

#[derive(Debug, thiserror::Error)]
pub enum SegmentError {
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Indices whose normal is close to horizontal: `|n_z| ≤ max_nz`.
pub fn verticality_filter(features: &PointFeatures, max_nz: f64) -> Vec<usize> {
    (0..features.len()).filter(|&i| features.normals[i].z.abs() <= max_nz).collect()
}

/// Indices with `curvature ≤ max_curvature`.
pub fn curvature_filter(features: &PointFeatures, max_curvature: f64) -> Vec<usize> {
    (0..features.len()).filter(|&i| features.curvature[i] <= max_curvature).collect()
}

/// Minimum height above ground of the points used to detect conjoined stems.
pub const SPLIT_MIN_HEIGHT: f64 = 1.0;

/// Separates stems that share a cluster, typically through a fused base.
///
/// DBSCAN runs on the xy projection of the member points at least
/// [`SPLIT_MIN_HEIGHT`] above ground. With two or more resulting clusters,
/// every member is reassigned to the sub-cluster with the nearest xy centroid;
/// otherwise the input is returned as is.
pub fn split_conjoined(
    cluster: &TrunkCluster,
    cloud: &PointCloud,
    ground: &GroundModel,
    params: &DbscanParams,
) -> Vec<TrunkCluster> {
    let pts = cloud.points();
    let upper: Vec<usize> = cluster
        .indices
        .iter()
        .copied()
        .filter(|&i| ground.height_above_ground(&pts[i]) >= SPLIT_MIN_HEIGHT)
        .collect();
    if upper.is_empty() {
        return vec![cluster.clone()];
    }
    let xy: Vec<[f64; 2]> = upper.iter().map(|&i| [pts[i].x, pts[i].y]).collect();
    let labels = dbscan(&xy, params);
    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    if count < 2 {
        return vec![cluster.clone()];
    }
    let mut sums = vec![(0.0, 0.0, 0usize); count];
    for (p, l) in xy.iter().zip(&labels) {
        if let Some(l) = *l {
            sums[l].0 += p[0];
            sums[l].1 += p[1];
            sums[l].2 += 1;
        }
    }
    let centers: Vec<(f64, f64)> = sums.iter().map(|&(x, y, n)| (x / n as f64, y / n as f64)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for &i in &cluster.indices {
        let p = &pts[i];
        let best = centers
            .iter()
            .enumerate()
            .map(|(k, c)| (k, (p.x - c.0).powi(2) + (p.y - c.1).powi(2)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(k, _)| k)
            .expect("at least two centers");
        members[best].push(i);
    }
    members
        .into_iter()
        .filter_map(|m| TrunkCluster::from_indices(cloud, ground, m))
        .collect()
}

/// Restores stem points removed by the foliage filters.
///
/// Deeply furrowed bark has high curvature along ridges and valleys, so the
/// filters thin the stem into strips. Each point of `pool` (indices into
/// `cloud`, typically all above-ground points) lying within `radius` of a
/// member of a stem is added to that stem. Growth is a single step from the
/// original members, not transitive, and a point joins at most one stem: the
/// first in input order. A non-positive radius returns the stems unchanged.
pub fn complete_stems(
    stems: Vec<TrunkCluster>,
    cloud: &PointCloud,
    ground: &GroundModel,
    pool: &[usize],
    radius: f64,
) -> Vec<TrunkCluster> {
    if !(radius > 0.0) || pool.is_empty() {
        return stems;
    }
    let pts = cloud.points();
    let tree = KdTree::build(pool.iter().map(|&i| [pts[i].x, pts[i].y, pts[i].z]).collect());
    let mut claimed = vec![false; cloud.len()];
    for s in &stems {
        for &i in &s.indices {
            claimed[i] = true;
        }
    }
    let mut buf = Vec::new();
    stems
        .into_iter()
        .map(|stem| {
            let mut indices = stem.indices.clone();
            for &i in &stem.indices {
                let p = &pts[i];
                tree.radius_into(&[p.x, p.y, p.z], radius, &mut buf);
                for &j in &buf {
                    if !claimed[pool[j]] {
                        claimed[pool[j]] = true;
                        indices.push(pool[j]);
                    }
                }
            }
            TrunkCluster::from_indices(cloud, ground, indices).expect("stem members are non-empty")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Point3;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn is_unit(v: &Vector3<f64>) -> bool {
        (v.norm() - 1.0).abs() <= 1e-6
    }

    fn features(normals: Vec<Vector3<f64>>, curvature: Vec<f64>) -> PointFeatures {
        let n = normals.len();
        PointFeatures {
            normals,
            curvature,
            degenerate: vec![false; n],
            k: 8,
        }
    }

    #[test]
    fn verticality_rules() {
        let f = features(
            vec![Vector3::z(), Vector3::x(), Vector3::new(0.75f64.sqrt(), 0.0, 0.5)],
            vec![0.0; 3],
        );
        assert!(f.normals.iter().all(is_unit));
        assert_eq!(verticality_filter(&f, 0.5), vec![1, 2]);
    }

    #[test]
    fn curvature_rules() {
        let f = features(vec![Vector3::x(); 3], vec![0.0, 0.3, 0.1]);
        assert_eq!(curvature_filter(&f, 0.1), vec![0, 2]);
    }

    fn ring(cx: f64, cy: f64, r: f64, z0: f64, z1: f64, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 2.399963;
                let z = z0 + (z1 - z0) * (i as f64 / n as f64);
                Point3::new(cx + r * t.cos(), cy + r * t.sin(), z)
            })
            .collect()
    }

    #[test]
    fn conjoined_stems_split() {
        let ground = GroundModel::flat(0.0);
        let mut pts = ring(0.0, 0.0, 0.12, 0.0, 3.0, 1500);
        pts.extend(ring(0.5, 0.0, 0.12, 0.0, 3.0, 1500));
        // fused base bridging the stems below 0.8 m
        for i in 0..300 {
            pts.push(Point3::new(0.1 + 0.3 * (i as f64 / 300.0), 0.05 * (i as f64).sin(), 0.8 * (i % 17) as f64 / 17.0));
        }
        let cloud = PointCloud::new(pts);
        let all = TrunkCluster::from_indices(&cloud, &ground, (0..cloud.len()).collect()).unwrap();
        let parts = split_conjoined(&all, &cloud, &ground, &DbscanParams::new(0.1, 10).unwrap());
        assert_eq!(parts.len(), 2);
        let total: usize = parts.iter().map(TrunkCluster::len).sum();
        assert_eq!(total, cloud.len());
        assert!((parts[0].centroid.x - parts[1].centroid.x).abs() > 0.3);
    }

    #[test]
    fn completion_restores_filtered_points() {
        let ground = GroundModel::flat(0.0);
        let cloud = PointCloud::new(ring(0.0, 0.0, 0.2, 0.0, 2.0, 2000).into_iter().chain(ring(3.0, 0.0, 0.2, 0.0, 2.0, 500)).collect());
        // every other point survived the filters; the far stem is not a member
        let seed = TrunkCluster::from_indices(&cloud, &ground, (0..2000).step_by(2).collect()).unwrap();
        let all: Vec<usize> = (0..cloud.len()).collect();
        let done = complete_stems(vec![seed.clone()], &cloud, &ground, &all, 0.1);
        assert_eq!(done[0].indices, (0..2000).collect::<Vec<_>>());
        assert_eq!(complete_stems(vec![seed.clone()], &cloud, &ground, &all, 0.0), vec![seed.clone()]);
        // a point near two stems goes to the first only
        let other = TrunkCluster::from_indices(&cloud, &ground, (0..2000).skip(2).step_by(2).collect()).unwrap();
        let both = complete_stems(vec![seed, other], &cloud, &ground, &all, 0.1);
        assert_eq!(both[0].len(), 2000);
        assert_eq!(both[1].len(), 999);
    }

    #[test]
    fn single_stem_untouched() {
        let ground = GroundModel::flat(0.0);
        let cloud = PointCloud::new(ring(1.0, 1.0, 0.2, 0.0, 4.0, 3000));
        let all = TrunkCluster::from_indices(&cloud, &ground, (0..cloud.len()).collect()).unwrap();
        let parts = split_conjoined(&all, &cloud, &ground, &DbscanParams::new(0.1, 10).unwrap());
        assert_eq!(parts, vec![all]);
    }

    #[test]
    fn low_cluster_untouched() {
        let ground = GroundModel::flat(0.0);
        let cloud = PointCloud::new(ring(0.0, 0.0, 0.2, 0.0, 0.9, 200));
        let all = TrunkCluster::from_indices(&cloud, &ground, (0..cloud.len()).collect()).unwrap();
        assert_eq!(split_conjoined(&all, &cloud, &ground, &DbscanParams::new(0.1, 3).unwrap()), vec![all]);
    }

    proptest! {
        #[test]
        fn filters_are_monotone(
            nz in proptest::collection::vec(-1.0f64..1.0, 1..60),
            lo in 0.0f64..1.0, extra in 0.0f64..0.5,
        ) {
            let normals: Vec<Vector3<f64>> = nz.iter().map(|&z| Vector3::new((1.0 - z * z).sqrt(), 0.0, z)).collect();
            let curv: Vec<f64> = nz.iter().map(|z| z.abs() / 3.0).collect();
            let f = features(normals, curv);
            let a = verticality_filter(&f, lo);
            let b = verticality_filter(&f, lo + extra);
            prop_assert!(a.iter().all(|i| b.contains(i)));
            let a = curvature_filter(&f, lo / 3.0);
            let b = curvature_filter(&f, (lo + extra) / 3.0);
            prop_assert!(a.iter().all(|i| b.contains(i)));
            prop_assert!(b.len() <= f.len());
        }
    }
}
