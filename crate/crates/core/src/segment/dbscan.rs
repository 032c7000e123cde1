use serde::{Deserialize, Serialize};

use super::SegmentError;
use crate::cloud::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self, SegmentError> {
        let p = DbscanParams { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(SegmentError::Argument(format!("DBSCAN eps must be positive, got {}", self.eps)));
        }
        if self.min_pts == 0 {
            return Err(SegmentError::Argument("DBSCAN min_pts must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Density-based clustering. Returns one label per point: `Some(cluster)` or
/// `None` for noise.
///
/// A point is core when at least `min_pts` points (itself included) lie within
/// `eps`. Clusters are numbered in order of their lowest-index core point, and
/// a border point joins the first cluster that reaches it in that order.
pub fn dbscan<const D: usize>(points: &[[f64; D]], params: &DbscanParams) -> Vec<Option<usize>> {
    let n = points.len();
    let tree = KdTree::build(points.to_vec());
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for p in points {
        tree.radius_into(p, params.eps, &mut buf);
        neighbors.push(buf.clone());
    }
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next_id = 0;
    let mut queue = Vec::new();
    for seed in 0..n {
        if labels[seed].is_some() || !core[seed] {
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[seed] = Some(id);
        queue.clear();
        queue.push(seed);
        while let Some(i) = queue.pop() {
            for &j in &neighbors[i] {
                if labels[j].is_none() {
                    labels[j] = Some(id);
                    if core[j] {
                        queue.push(j);
                    }
                }
            }
        }
    }
    labels
}
