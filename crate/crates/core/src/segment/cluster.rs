use crate::cloud::{KdTree, Point3, PointCloud};
use crate::ground::GroundModel;

/// One candidate stem: member indices into the source cloud plus
/// ground-referenced vertical extent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrunkCluster {
    /// Sorted ascending, never empty.
    pub indices: Vec<usize>,
    pub centroid: Point3,
    pub base_height: f64,
    pub top_height: f64,
}

impl TrunkCluster {
    /// Returns `None` for an empty index set.
    pub fn from_indices(cloud: &PointCloud, ground: &GroundModel, mut indices: Vec<usize>) -> Option<Self> {
        if indices.is_empty() {
            return None;
        }
        indices.sort_unstable();
        indices.dedup();
        let pts = cloud.points();
        let mut sum = nalgebra::Vector3::zeros();
        let mut base = f64::INFINITY;
        let mut top = f64::NEG_INFINITY;
        for &i in &indices {
            sum += pts[i].coords;
            let h = ground.height_above_ground(&pts[i]);
            base = base.min(h);
            top = top.max(h);
        }
        Some(TrunkCluster {
            centroid: Point3::from(sum / indices.len() as f64),
            indices,
            base_height: base,
            top_height: top,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Connected components of the graph joining points at distance ≤ `tolerance`.
///
/// Components below `min_size` are dropped. Each cluster lists its members in
/// ascending order; clusters are sorted by descending size, then lowest member.
pub fn euclidean_cluster(points: &[Point3], tolerance: f64, min_size: usize) -> Vec<Vec<usize>> {
    let tree = KdTree::build(points.iter().map(|p| [p.x, p.y, p.z]).collect());
    let mut visited = vec![false; points.len()];
    let mut clusters = Vec::new();
    let mut stack = Vec::new();
    let mut buf = Vec::new();
    for seed in 0..points.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut members = vec![seed];
        stack.push(seed);
        while let Some(i) = stack.pop() {
            tree.radius_into(tree.point(i), tolerance, &mut buf);
            for &j in &buf {
                if !visited[j] {
                    visited[j] = true;
                    members.push(j);
                    stack.push(j);
                }
            }
        }
        if members.len() >= min_size.max(1) {
            members.sort_unstable();
            clusters.push(members);
        }
    }
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    clusters
}

/// Joins vertically stacked fragments of one stem.
///
/// Two clusters merge when their xy centroids are within `xy_gap` and their
/// height intervals overlap by at most `z_overlap_allowed` (disjoint intervals
/// always qualify). Merging is transitive. Output keeps the order of each
/// group's first member cluster.
pub fn merge_stem_clusters(clusters: Vec<TrunkCluster>, xy_gap: f64, z_overlap_allowed: f64) -> Vec<TrunkCluster> {
    let n = clusters.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            let (ca, cb) = (&clusters[a], &clusters[b]);
            let dxy = ((ca.centroid.x - cb.centroid.x).powi(2) + (ca.centroid.y - cb.centroid.y).powi(2)).sqrt();
            let overlap = ca.top_height.min(cb.top_height) - ca.base_height.max(cb.base_height);
            if dxy <= xy_gap && overlap <= z_overlap_allowed {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Option<TrunkCluster>> = vec![None; n];
    for (i, c) in clusters.into_iter().enumerate() {
        let root = find(&mut parent, i);
        match &mut groups[root] {
            slot @ None => *slot = Some(c),
            Some(acc) => {
                let (na, nb) = (acc.indices.len() as f64, c.indices.len() as f64);
                acc.centroid = Point3::from((acc.centroid.coords * na + c.centroid.coords * nb) / (na + nb));
                acc.base_height = acc.base_height.min(c.base_height);
                acc.top_height = acc.top_height.max(c.top_height);
                acc.indices.extend(c.indices);
                acc.indices.sort_unstable();
            }
        }
    }
    groups.into_iter().flatten().collect()
}
