use serde::{Deserialize, Serialize};

use super::kdtree::{KdTree, Neighbor};
use super::{class_index, Classifier};
use crate::dataset::LabeledPoint;
use crate::error::{Error, Result};
use crate::ingest::EventClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Majority vote among the `k` nearest training points (squared Euclidean
/// distance on raw degrees). Vote ties go to the smallest label.
#[derive(Debug, Clone)]
pub struct KnnModel {
    params: KnnParams,
    classes: Vec<EventClass>,
    labels: Vec<usize>,
    tree: KdTree,
}

impl KnnModel {
    pub fn fit(points: &[LabeledPoint], classes: &[EventClass], params: KnnParams) -> Result<Self> {
        if params.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if params.k > points.len() {
            return Err(Error::invalid(format!(
                "k = {} exceeds the {} training points",
                params.k,
                points.len()
            )));
        }
        let labels = points
            .iter()
            .map(|p| class_index(classes, p.label))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            classes: classes.to_vec(),
            labels,
            tree: KdTree::build(points.iter().map(LabeledPoint::features).collect()),
        })
    }

    pub fn params(&self) -> KnnParams {
        self.params
    }

    pub fn neighbors(&self, lat: f64, lon: f64) -> Vec<Neighbor> {
        self.tree.nearest([lat, lon], self.params.k)
    }

    fn votes(&self, lat: f64, lon: f64) -> Vec<usize> {
        let mut votes = vec![0usize; self.classes.len()];
        for n in self.neighbors(lat, lon) {
            votes[self.labels[n.index]] += 1;
        }
        votes
    }

    pub(crate) fn training_points(&self) -> Vec<LabeledPoint> {
        self.tree
            .points()
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| LabeledPoint::new(p[0], p[1], self.classes[l]))
            .collect()
    }
}

impl Classifier for KnnModel {
    fn classes(&self) -> &[EventClass] {
        &self.classes
    }

    fn predict(&self, lat: f64, lon: f64) -> EventClass {
        let votes = self.votes(lat, lon);
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    fn predict_proba(&self, lat: f64, lon: f64) -> Vec<f64> {
        let votes = self.votes(lat, lon);
        let total: usize = votes.iter().sum();
        votes.iter().map(|&v| v as f64 / total as f64).collect()
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct KnnPayload {
    pub params: KnnParams,
    pub classes: Vec<EventClass>,
    pub points: Vec<LabeledPoint>,
}

impl From<&KnnModel> for KnnPayload {
    fn from(m: &KnnModel) -> Self {
        KnnPayload {
            params: m.params,
            classes: m.classes.clone(),
            points: m.training_points(),
        }
    }
}

impl TryFrom<KnnPayload> for KnnModel {
    type Error = Error;

    fn try_from(p: KnnPayload) -> Result<Self> {
        KnnModel::fit(&p.points, &p.classes, p.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EventClass::{ArtilleryFight as B, Refugees as A};

    fn pt(lat: f64, lon: f64, c: EventClass) -> LabeledPoint {
        LabeledPoint::new(lat, lon, c)
    }

    #[test]
    fn single_point() {
        let m = KnnModel::fit(&[pt(1.0, 1.0, A)], &[A, B], KnnParams { k: 1 }).unwrap();
        assert_eq!(m.predict(-50.0, 120.0), A);
    }

    #[test]
    fn three_point_vote() {
        // distances² from (0, 0.5): 0.25, 0.25, 45.25 -> two A votes, one B
        let pts = [pt(0.0, 0.0, A), pt(0.0, 1.0, A), pt(5.0, 5.0, B)];
        let m = KnnModel::fit(&pts, &[A, B], KnnParams { k: 3 }).unwrap();
        assert_eq!(m.predict(0.0, 0.5), A);
        let p = m.predict_proba(0.0, 0.5);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn vote_fractions_and_ties() {
        let pts = [pt(0.0, 0.0, A), pt(0.0, 0.1, A), pt(0.1, 0.0, A), pt(0.1, 0.1, B)];
        let m = KnnModel::fit(&pts, &[A, B], KnnParams { k: 4 }).unwrap();
        assert_eq!(m.predict_proba(0.05, 0.05), vec![0.75, 0.25]);

        let tie = [pt(0.0, 0.0, B), pt(0.0, 1.0, A)];
        let m = KnnModel::fit(&tie, &[A, B], KnnParams { k: 2 }).unwrap();
        assert_eq!(m.predict(0.0, 0.0), A);
    }

    #[test]
    fn k_bounds() {
        let pts = [pt(0.0, 0.0, A), pt(1.0, 1.0, B)];
        assert!(KnnModel::fit(&pts, &[A, B], KnnParams { k: 3 }).is_err());
        assert!(KnnModel::fit(&pts, &[A, B], KnnParams { k: 0 }).is_err());
    }
}
