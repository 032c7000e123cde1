use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::CloudError;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static k-d tree over `D`-dimensional points, addressed by their input index.
#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for d in 0..D {
        let t = a[d] - b[d];
        s += t * t;
    }
    s
}

/// Max-heap entry ordered by (distance², index).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> KdTree<D> {
    pub fn build(points: Vec<[f64; D]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            let n = points.len();
            Self::build_node(&points, &mut order, 0, n, &mut nodes);
        }
        KdTree {
            points,
            order,
            nodes,
        }
    }

    fn build_node(
        points: &[[f64; D]],
        order: &mut [usize],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let id = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of widest spread
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        for &i in &order[start..end] {
            for d in 0..D {
                lo[d] = lo[d].min(points[i][d]);
                hi[d] = hi[d].max(points[i][d]);
            }
        }
        let axis = (0..D)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] <= 0.0 {
            nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = points[order[mid]][axis];
        nodes.push(Node::Leaf { start, end });
        let left = Self::build_node(points, order, start, mid, nodes);
        let right = Self::build_node(points, order, mid, end, nodes);
        nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64; D] {
        &self.points[index]
    }

    /// Indices with distance ≤ `r` from `query`, sorted ascending.
    pub fn radius_search(&self, query: &[f64; D], r: f64) -> Result<Vec<usize>, CloudError> {
        if !(r >= 0.0) {
            return Err(CloudError::Argument(format!(
                "search radius must be non-negative, got {r}"
            )));
        }
        let mut out = Vec::new();
        self.radius_into(query, r, &mut out);
        Ok(out)
    }

    /// Like [`radius_search`](Self::radius_search) but reuses `out` and skips validation.
    pub fn radius_into(&self, query: &[f64; D], r: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    for &i in &self.order[start..end] {
                        if dist2(&self.points[i], query) <= r2 {
                            out.push(i);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = query[axis] - value;
                    // left holds coordinates ≤ value, right ≥ value
                    if diff <= r {
                        stack.push(left);
                    }
                    if diff >= -r {
                        stack.push(right);
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// The `k` nearest indices ordered by (distance, index).
    pub fn knn(&self, query: &[f64; D], k: usize) -> Result<Vec<usize>, CloudError> {
        if k == 0 {
            return Err(CloudError::Argument("knn requires k ≥ 1".into()));
        }
        let k = k.min(self.points.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_node(0, query, k, &mut heap);
        let mut found = heap.into_vec();
        found.sort_unstable();
        Ok(found.into_iter().map(|c| c.index).collect())
    }

    fn knn_node(&self, id: usize, query: &[f64; D], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        d2: dist2(&self.points[i], query),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_node(near, query, k, heap);
                let worst = heap.peek().map_or(f64::INFINITY, |c| c.d2);
                if heap.len() < k || diff * diff <= worst {
                    self.knn_node(far, query, k, heap);
                }
            }
        }
    }
}
