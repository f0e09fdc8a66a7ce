//! CART classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values; a point goes left when `value <= threshold`. Among equally good
//! splits the first found wins, scanning latitude before longitude and
//! thresholds in ascending order.

use serde::{Deserialize, Serialize};

use super::{class_index, Classifier};
use crate::dataset::LabeledPoint;
use crate::error::Result;
use crate::ingest::EventClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        counts: Vec<usize>,
        label: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes are stored flat; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: TreeParams,
    pub classes: Vec<EventClass>,
    pub nodes: Vec<Node>,
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// `gini(parent) - Σ |child|/|parent| · gini(child)`.
pub fn impurity_decrease(parent: &[usize], left: &[usize], right: &[usize]) -> f64 {
    let n: usize = parent.iter().sum();
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = n as f64;
    gini(parent) - (nl as f64 / n) * gini(left) - (nr as f64 / n) * gini(right)
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// `Σ n_child · gini(child)` written without the divisions inside gini.
fn weighted_child_impurity(left: &[usize], nl: usize, right: &[usize], nr: usize) -> f64 {
    let part = |counts: &[usize], n: usize| {
        let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
        n as f64 - sq / n as f64
    };
    part(left, nl) + part(right, nr)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl DecisionTree {
    pub fn fit(points: &[LabeledPoint], classes: &[EventClass], params: TreeParams) -> Result<Self> {
        let k = classes.len();
        let x: Vec<[f64; 2]> = points.iter().map(LabeledPoint::features).collect();
        let y = points
            .iter()
            .map(|p| class_index(classes, p.label))
            .collect::<Result<Vec<_>>>()?;

        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, member indices, depth)
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, (0..points.len()).collect(), 0)];
        nodes.push(Node::Leaf {
            counts: vec![0; k],
            label: 0,
        });

        let mut order = Vec::new();
        while let Some((slot, members, depth)) = stack.pop() {
            let mut counts = vec![0usize; k];
            for &i in &members {
                counts[y[i]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_ok = params.max_depth.is_none_or(|d| depth < d);
            let split = if !pure && depth_ok && members.len() >= params.min_samples_split.max(2) {
                best_split(&x, &y, &members, &counts, &mut order)
            } else {
                None
            };
            match split {
                None => {
                    nodes[slot] = Node::Leaf {
                        label: majority(&counts),
                        counts,
                    };
                }
                Some(Candidate {
                    feature, threshold, ..
                }) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        members.iter().partition(|&&i| x[i][feature] <= threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf {
                        counts: Vec::new(),
                        label: 0,
                    });
                    nodes.push(Node::Leaf {
                        counts: Vec::new(),
                        label: 0,
                    });
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Ok(Self {
            params,
            classes: classes.to_vec(),
            nodes,
        })
    }

    fn leaf(&self, lat: f64, lon: f64) -> (&[usize], usize) {
        let x = [lat, lon];
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts, label } => return (counts, *label),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

fn best_split(
    x: &[[f64; 2]],
    y: &[usize],
    members: &[usize],
    parent: &[usize],
    order: &mut Vec<usize>,
) -> Option<Candidate> {
    let n = members.len();
    let k = parent.len();
    let mut best: Option<Candidate> = None;
    for feature in 0..2 {
        order.clear();
        order.extend_from_slice(members);
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));

        let mut left = vec![0usize; k];
        let mut right = parent.to_vec();
        for pos in 0..n - 1 {
            let i = order[pos];
            left[y[i]] += 1;
            right[y[i]] -= 1;
            let v = x[i][feature];
            let next = x[order[pos + 1]][feature];
            if v == next {
                continue;
            }
            let score = weighted_child_impurity(&left, pos + 1, &right, n - pos - 1);
            if best.as_ref().is_none_or(|b| score < b.score) {
                let mut threshold = v + (next - v) / 2.0;
                if threshold >= next {
                    threshold = v;
                }
                best = Some(Candidate {
                    feature,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

impl Classifier for DecisionTree {
    fn classes(&self) -> &[EventClass] {
        &self.classes
    }

    fn predict(&self, lat: f64, lon: f64) -> EventClass {
        self.classes[self.leaf(lat, lon).1]
    }

    fn predict_proba(&self, lat: f64, lon: f64) -> Vec<f64> {
        let (counts, _) = self.leaf(lat, lon);
        let total: usize = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use EventClass::{ArtilleryFight as B, Refugees as A};

    #[test]
    fn gini_of_balanced_pure_split() {
        assert_eq!(gini(&[5, 5]), 0.5);
        assert_eq!(impurity_decrease(&[5, 5], &[5, 0], &[0, 5]), 0.5);
        assert_eq!(impurity_decrease(&[2, 2], &[1, 1], &[1, 1]), 0.0);
    }

    #[test]
    fn xor_layout_is_fit_exactly() {
        let pts = [
            LabeledPoint::new(0.0, 0.0, A),
            LabeledPoint::new(1.0, 1.0, A),
            LabeledPoint::new(0.0, 1.0, B),
            LabeledPoint::new(1.0, 0.0, B),
        ];
        let t = DecisionTree::fit(&pts, &[A, B], TreeParams::default()).unwrap();
        for p in &pts {
            assert_eq!(t.predict(p.lat, p.lon), p.label);
        }
        // first split has zero gain; ties pick latitude at the lowest threshold
        match t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => assert_eq!((feature, threshold), (0, 0.5)),
            _ => panic!("root should split"),
        }
    }

    #[test]
    fn consistent_data_is_memorized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> = (0..600)
            .map(|_| {
                let lat = rng.random_range(29.2..37.2);
                let lon = rng.random_range(39.3..48.4);
                let c = if rng.random_bool(0.4) { A } else { B };
                LabeledPoint::new(lat, lon, c)
            })
            .collect();
        let t = DecisionTree::fit(&pts, &[A, B], TreeParams::default()).unwrap();
        assert!(pts.iter().all(|p| t.predict(p.lat, p.lon) == p.label));
    }

    #[test]
    fn children_partition_by_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<_> = (0..300)
            .map(|_| {
                let lat = (rng.random_range(0..20) as f64) / 4.0;
                let lon = (rng.random_range(0..20) as f64) / 4.0;
                LabeledPoint::new(lat, lon, if rng.random_bool(0.5) { A } else { B })
            })
            .collect();
        let params = TreeParams {
            max_depth: Some(6),
            min_samples_split: 2,
        };
        let t = DecisionTree::fit(&pts, &[A, B], params).unwrap();
        assert!(t.depth() <= 6);
        // every point lands in one leaf and leaf totals add up to the training size
        let total: usize = t
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts, .. } => Some(counts.iter().sum::<usize>()),
                _ => None,
            })
            .sum();
        assert_eq!(total, pts.len());
    }

    #[test]
    fn leaf_tie_goes_to_smallest_label() {
        // identical coordinates cannot be split
        let pts = [LabeledPoint::new(1.0, 1.0, B), LabeledPoint::new(1.0, 1.0, A)];
        let t = DecisionTree::fit(&pts, &[A, B], TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(1.0, 1.0), A);
        assert_eq!(t.predict_proba(1.0, 1.0), vec![0.5, 0.5]);
    }
}
