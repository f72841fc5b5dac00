//! Exact k-nearest and radius queries over 3-D points.
//!
//! A median-split KD-tree with leaves of up to 16 points. Results are exact:
//! k-NN returns the same ids as a brute-force scan sorted by
//! `(squared distance, id)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub dist2: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.dist2.sqrt()
    }
}

// max-heap order on (dist2, id)
impl Eq for Neighbor {}
impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.id.cmp(&other.id))
    }
}
impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum NeighborQuery {
    K(usize),
    Radius(f64),
}

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

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
pub(crate) fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

impl SpatialIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let node_id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return node_id;
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let spread = hi - lo;
        let axis = spread.imax();
        if spread[axis] <= 0.0 {
            // all points coincide
            self.nodes.push(Node::Leaf { start, end });
            return node_id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[node_id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        node_id
    }

    /// The `k` nearest points, ascending by `(distance, id)`.
    pub fn knn(&self, query: &Vec3, k: usize) -> Vec<Neighbor> {
        if self.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, &mut heap);
        heap.into_sorted_vec()
    }

    fn knn_rec(&self, node: usize, q: &Vec3, k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &id in &self.order[start..end] {
                    let cand = Neighbor {
                        id,
                        dist2: dist2(q, &self.points[id]),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("non-empty heap") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, q, k, heap);
                // equal distances may still hold a lower id, so only prune strictly
                if heap.len() < k || diff * diff <= heap.peek().expect("non-empty heap").dist2 {
                    self.knn_rec(far, q, k, heap);
                }
            }
        }
    }

    pub fn nearest(&self, query: &Vec3) -> Option<Neighbor> {
        self.knn(query, 1).into_iter().next()
    }

    /// All points with distance `<= radius`, in traversal order.
    pub fn radius(&self, query: &Vec3, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        self.radius_into(query, radius, &mut out);
        out
    }

    pub fn radius_into(&self, query: &Vec3, radius: f64, out: &mut Vec<Neighbor>) {
        out.clear();
        if self.is_empty() || !(radius >= 0.0) {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &id in &self.order[start..end] {
                        let d2 = dist2(query, &self.points[id]);
                        if d2 <= r2 {
                            out.push(Neighbor { id, dist2: d2 });
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
                    if diff <= radius {
                        stack.push(left);
                    }
                    if diff >= -radius {
                        stack.push(right);
                    }
                }
            }
        }
    }

    /// Id lists for either query kind. k-NN ids are ordered by distance;
    /// radius ids are ascending.
    pub fn neighbors(&self, query: &Vec3, kind: NeighborQuery) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        match kind {
            NeighborQuery::K(k) => {
                if k == 0 {
                    return Err(Error::param("k", "must be at least 1"));
                }
                Ok(self.knn(query, k).into_iter().map(|n| n.id).collect())
            }
            NeighborQuery::Radius(r) => {
                if !(r > 0.0) {
                    return Err(Error::param("radius", "must be positive"));
                }
                let mut ids: Vec<usize> = self.radius(query, r).into_iter().map(|n| n.id).collect();
                ids.sort_unstable();
                Ok(ids)
            }
        }
    }
}
