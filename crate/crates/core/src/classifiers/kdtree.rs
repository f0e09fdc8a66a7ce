//! Static 2-d tree for exact k-nearest-neighbour queries.
//!
//! Neighbours are ranked by `(squared distance, insertion index)`, so the
//! result is fully determined even when points coincide, which is common for
//! city-centroid geocoding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 8;

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
pub struct KdTree {
    points: Vec<[f64; 2]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// A neighbour returned by [`KdTree::nearest`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub dist2: f64,
    pub index: usize,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn squared_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

impl KdTree {
    pub fn build(points: Vec<[f64; 2]>) -> Self {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build_node(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let slice = &mut self.order[start..end];
        let mid = slice.len() / 2;
        let pts = &self.points;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        let value = pts[slice[mid]][axis];
        let split = start + mid;

        // placeholder, patched once the children exist
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, split);
        let right = self.build_node(split, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &i in &self.order[start..end] {
            for a in 0..2 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        if hi[1] - lo[1] > hi[0] - lo[0] {
            1
        } else {
            0
        }
    }

    /// The `k` nearest points to `query`, nearest first.
    pub fn nearest(&self, query: [f64; 2], k: usize) -> Vec<Neighbor> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, q: [f64; 2], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Neighbor {
                        dist2: squared_distance(q, self.points[i]),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
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
                self.search(near, q, k, heap);
                // Equal bounds are still visited: an equidistant point with a
                // smaller index would outrank the current worst.
                let bound = diff * diff;
                if heap.len() < k || bound <= heap.peek().unwrap().dist2 {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[[f64; 2]], q: [f64; 2], k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|x| x.1).collect()
    }

    #[test]
    fn matches_linear_scan_with_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // heavy duplication on a coarse grid
        let pts: Vec<[f64; 2]> = (0..1500)
            .map(|_| [rng.random_range(0..12) as f64 * 0.5, rng.random_range(0..9) as f64 * 0.5])
            .collect();
        let tree = KdTree::build(pts.clone());
        for _ in 0..200 {
            let q = [rng.random_range(-1.0..7.0), rng.random_range(-1.0..5.0)];
            for k in [1, 4, 17, 60] {
                let got: Vec<usize> = tree.nearest(q, k).iter().map(|n| n.index).collect();
                assert_eq!(got, brute(&pts, q, k));
            }
        }
    }

    #[test]
    fn small_and_empty() {
        assert!(KdTree::build(vec![]).nearest([0.0, 0.0], 3).is_empty());
        let t = KdTree::build(vec![[1.0, 1.0], [0.0, 0.0]]);
        let n = t.nearest([0.1, 0.1], 5);
        assert_eq!(n.len(), 2);
        assert_eq!(n[0].index, 1);
    }
}
