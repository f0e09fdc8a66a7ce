//! The four classifier families and the uniform train/predict contract.

pub mod format;
pub mod kdtree;
pub mod knn;
pub mod logistic;
pub mod naive_bayes;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ingest::EventClass;

pub use format::{deserialize_model, serialize_model, FORMAT_VERSION};
pub use knn::{KnnModel, KnnParams};
pub use logistic::{LogisticModel, LogisticParams};
pub use naive_bayes::{GaussianNb, NaiveBayesParams};
pub use tree::{DecisionTree, TreeParams};

/// Prediction over (lat, lon). Probability vectors follow `classes()` order.
pub trait Classifier {
    fn classes(&self) -> &[EventClass];
    fn predict(&self, lat: f64, lon: f64) -> EventClass;
    fn predict_proba(&self, lat: f64, lon: f64) -> Vec<f64>;
}

pub(crate) fn class_index(classes: &[EventClass], c: EventClass) -> Result<usize> {
    classes
        .binary_search(&c)
        .map_err(|_| Error::Training(format!("label {} not in class list", c.label())))
}

/// Normalized probabilities from unnormalized log scores.
pub(crate) fn log_softmax_normalize(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = log_scores.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Knn,
    NaiveBayes,
    DecisionTree,
    LogisticRegression,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Knn,
        Algorithm::NaiveBayes,
        Algorithm::DecisionTree,
        Algorithm::LogisticRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::LogisticRegression => "logistic_regression",
        }
    }

    /// Short prefix used in model ids, e.g. `dt-0-194`.
    pub fn short(self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::NaiveBayes => "nb",
            Algorithm::DecisionTree => "dt",
            Algorithm::LogisticRegression => "lr",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Algorithm::Knn => "KNN",
            Algorithm::NaiveBayes => "Naive Bayes",
            Algorithm::DecisionTree => "Decision Trees",
            Algorithm::LogisticRegression => "Logistic Regression",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s || a.short() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

/// Settings for every family; `train` reads the one it needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub knn: KnnParams,
    pub naive_bayes: NaiveBayesParams,
    pub decision_tree: TreeParams,
    pub logistic_regression: LogisticParams,
}

impl Hyperparameters {
    /// The settings relevant to one family, as JSON.
    pub fn for_algorithm(&self, algorithm: Algorithm) -> serde_json::Value {
        let v = match algorithm {
            Algorithm::Knn => serde_json::to_value(self.knn),
            Algorithm::NaiveBayes => serde_json::to_value(self.naive_bayes),
            Algorithm::DecisionTree => serde_json::to_value(self.decision_tree),
            Algorithm::LogisticRegression => serde_json::to_value(self.logistic_regression),
        };
        v.expect("plain structs serialize")
    }
}

#[derive(Debug, Clone)]
pub enum ModelParams {
    Knn(KnnModel),
    NaiveBayes(GaussianNb),
    DecisionTree(DecisionTree),
    LogisticRegression(LogisticModel),
}

impl ModelParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelParams::Knn(_) => Algorithm::Knn,
            ModelParams::NaiveBayes(_) => Algorithm::NaiveBayes,
            ModelParams::DecisionTree(_) => Algorithm::DecisionTree,
            ModelParams::LogisticRegression(_) => Algorithm::LogisticRegression,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            ModelParams::Knn(m) => m,
            ModelParams::NaiveBayes(m) => m,
            ModelParams::DecisionTree(m) => m,
            ModelParams::LogisticRegression(m) => m,
        }
    }

    pub fn hyperparameters(&self) -> serde_json::Value {
        let v = match self {
            ModelParams::Knn(m) => serde_json::to_value(m.params()),
            ModelParams::NaiveBayes(m) => serde_json::to_value(m.params),
            ModelParams::DecisionTree(m) => serde_json::to_value(m.params),
            ModelParams::LogisticRegression(m) => serde_json::to_value(m.params),
        };
        v.expect("plain structs serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub id: String,
    pub dataset_id: String,
    pub algorithm: Algorithm,
    pub classes: Vec<EventClass>,
    pub seed: u64,
    /// RFC 3339; left empty for reproducible builds.
    pub trained_at: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub meta: ModelMeta,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn algorithm(&self) -> Algorithm {
        self.meta.algorithm
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.meta.id = id.into();
        self
    }

    pub fn with_timestamp(mut self, stamp: impl Into<String>) -> Self {
        self.meta.trained_at = Some(stamp.into());
        self
    }
}

impl Classifier for TrainedModel {
    fn classes(&self) -> &[EventClass] {
        &self.meta.classes
    }

    fn predict(&self, lat: f64, lon: f64) -> EventClass {
        self.params.inner().predict(lat, lon)
    }

    fn predict_proba(&self, lat: f64, lon: f64) -> Vec<f64> {
        self.params.inner().predict_proba(lat, lon)
    }
}

/// Default model id: `<short algorithm>-<dataset id>`.
pub fn model_id(algorithm: Algorithm, dataset_id: &str) -> String {
    format!("{}-{}", algorithm.short(), dataset_id)
}

/// Fits one model. Training is deterministic in (data, hyperparameters).
pub fn train(
    algorithm: Algorithm,
    data: &Dataset,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(Error::Training(format!("dataset `{}` is empty", data.id)));
    }
    if let Some(p) = data.points.iter().find(|p| !p.lat.is_finite() || !p.lon.is_finite()) {
        return Err(Error::Training(format!(
            "non-finite feature values ({}, {})",
            p.lat, p.lon
        )));
    }
    let mut classes: Vec<EventClass> = data.points.iter().map(|p| p.label).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Training(format!(
            "dataset `{}` has a single class; at least two are required",
            data.id
        )));
    }

    let pts = &data.points;
    let params = match algorithm {
        Algorithm::Knn => ModelParams::Knn(KnnModel::fit(pts, &classes, hyper.knn)?),
        Algorithm::NaiveBayes => ModelParams::NaiveBayes(GaussianNb::fit(pts, &classes, hyper.naive_bayes)?),
        Algorithm::DecisionTree => {
            ModelParams::DecisionTree(DecisionTree::fit(pts, &classes, hyper.decision_tree)?)
        }
        Algorithm::LogisticRegression => {
            ModelParams::LogisticRegression(LogisticModel::fit(pts, &classes, hyper.logistic_regression)?)
        }
    };
    let dataset_id = data.id.trim_end_matches(".train").to_string();
    Ok(TrainedModel {
        meta: ModelMeta {
            id: model_id(algorithm, &dataset_id),
            dataset_id,
            algorithm,
            classes,
            seed,
            trained_at: None,
        },
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledPoint;
    use EventClass::*;

    fn two_class() -> Dataset {
        Dataset::from_points(
            "0-194",
            vec![
                LabeledPoint::new(36.0, 44.0, Refugees),
                LabeledPoint::new(36.1, 44.1, Refugees),
                LabeledPoint::new(33.4, 43.3, ArtilleryFight),
                LabeledPoint::new(33.5, 43.2, ArtilleryFight),
            ],
        )
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(a.short().parse::<Algorithm>().unwrap(), a);
        }
        assert!("svm".parse::<Algorithm>().is_err());
    }

    #[test]
    fn train_errors() {
        let one = Dataset::from_points("x", vec![LabeledPoint::new(1.0, 1.0, Refugees)]);
        for a in Algorithm::ALL {
            assert!(matches!(train(a, &one, &Hyperparameters::default(), 0), Err(Error::Training(_))));
        }
        let mut bad = two_class();
        bad.points[0].lat = f64::NAN;
        assert!(train(Algorithm::DecisionTree, &bad, &Hyperparameters::default(), 0).is_err());
        // default k = 5 exceeds four points
        assert!(train(Algorithm::Knn, &two_class(), &Hyperparameters::default(), 0).is_err());
    }

    #[test]
    fn every_family_trains_and_normalizes() {
        let mut h = Hyperparameters::default();
        h.knn.k = 3;
        for a in Algorithm::ALL {
            let m = train(a, &two_class(), &h, 0).unwrap();
            assert_eq!(m.meta.classes, vec![Refugees, ArtilleryFight]);
            assert_eq!(m.predict(36.05, 44.05), Refugees, "{a}");
            assert_eq!(m.predict(33.45, 43.25), ArtilleryFight, "{a}");
            let p = m.predict_proba(34.0, 45.0);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(train(Algorithm::DecisionTree, &two_class(), &h, 0).unwrap().id(), "dt-0-194");
    }
}
