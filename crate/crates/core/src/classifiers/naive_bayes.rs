//! Gaussian naive Bayes over (lat, lon) with independent features.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{class_index, log_softmax_normalize, Classifier};
use crate::dataset::LabeledPoint;
use crate::error::Result;
use crate::ingest::EventClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Fraction of the largest per-feature variance added to every variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self {
            var_smoothing: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub params: NaiveBayesParams,
    pub classes: Vec<EventClass>,
    pub priors: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    pub variances: Vec<[f64; 2]>,
    pub epsilon: f64,
}

fn mean_var(values: impl Iterator<Item = [f64; 2]> + Clone) -> ([f64; 2], [f64; 2]) {
    let mut n = 0.0;
    let mut sum = [0.0; 2];
    for v in values.clone() {
        n += 1.0;
        sum[0] += v[0];
        sum[1] += v[1];
    }
    let mean = [sum[0] / n, sum[1] / n];
    let mut ss = [0.0; 2];
    for v in values {
        ss[0] += (v[0] - mean[0]).powi(2);
        ss[1] += (v[1] - mean[1]).powi(2);
    }
    (mean, [ss[0] / n, ss[1] / n])
}

impl GaussianNb {
    pub fn fit(points: &[LabeledPoint], classes: &[EventClass], params: NaiveBayesParams) -> Result<Self> {
        let (_, total_var) = mean_var(points.iter().map(LabeledPoint::features));
        let mut epsilon = params.var_smoothing * total_var[0].max(total_var[1]);
        if epsilon <= 0.0 {
            // every training point coincides
            epsilon = params.var_smoothing.max(f64::MIN_POSITIVE);
        }

        let labels = points
            .iter()
            .map(|p| class_index(classes, p.label))
            .collect::<Result<Vec<_>>>()?;
        let n = points.len() as f64;
        let mut priors = Vec::with_capacity(classes.len());
        let mut means = Vec::with_capacity(classes.len());
        let mut variances = Vec::with_capacity(classes.len());
        for c in 0..classes.len() {
            let members = points
                .iter()
                .zip(&labels)
                .filter(move |(_, &l)| l == c)
                .map(|(p, _)| p.features());
            let count = members.clone().count() as f64;
            let (mean, var) = mean_var(members);
            priors.push(count / n);
            means.push(mean);
            variances.push([var[0] + epsilon, var[1] + epsilon]);
        }
        Ok(Self {
            params,
            classes: classes.to_vec(),
            priors,
            means,
            variances,
            epsilon,
        })
    }

    /// `log π_c + Σ_f log N(x_f; μ_cf, σ²_cf)` for every class.
    pub fn joint_log_likelihood(&self, lat: f64, lon: f64) -> Vec<f64> {
        let x = [lat, lon];
        (0..self.classes.len())
            .map(|c| {
                let mut ll = self.priors[c].ln();
                for f in 0..2 {
                    let var = self.variances[c][f];
                    ll -= 0.5 * (2.0 * PI * var).ln();
                    ll -= (x[f] - self.means[c][f]).powi(2) / (2.0 * var);
                }
                ll
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn classes(&self) -> &[EventClass] {
        &self.classes
    }

    fn predict(&self, lat: f64, lon: f64) -> EventClass {
        let jll = self.joint_log_likelihood(lat, lon);
        let mut best = 0;
        for (i, v) in jll.iter().enumerate() {
            if *v > jll[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    fn predict_proba(&self, lat: f64, lon: f64) -> Vec<f64> {
        log_softmax_normalize(&self.joint_log_likelihood(lat, lon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use EventClass::{ArtilleryFight as B, Refugees as A};

    #[test]
    fn hand_computed_posterior() {
        // class A at (0,0),(2,2); class B at (4,0),(4,4)
        let pts = [
            LabeledPoint::new(0.0, 0.0, A),
            LabeledPoint::new(2.0, 2.0, A),
            LabeledPoint::new(4.0, 0.0, B),
            LabeledPoint::new(4.0, 4.0, B),
        ];
        let m = GaussianNb::fit(&pts, &[A, B], NaiveBayesParams { var_smoothing: 0.0 }).unwrap();
        // A: mean (1,1), var (1,1); B: mean (4,2), var (0 + eps, 4)
        assert_eq!(m.means, vec![[1.0, 1.0], [4.0, 2.0]]);
        assert_eq!(m.variances[0], [1.0, 1.0]);
        assert_eq!(m.variances[1][1], 4.0);

        let params = NaiveBayesParams { var_smoothing: 1e-2 };
        let m = GaussianNb::fit(&pts, &[A, B], params).unwrap();
        // overall variances: lat 2.75, lon 2.75 -> eps = 0.0275
        let eps = 0.0275;
        let pdf = |x: f64, mu: f64, var: f64| {
            (-(x - mu) * (x - mu) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
        };
        let (x, y) = (3.0, 1.5);
        let a = 0.5 * pdf(x, 1.0, 1.0 + eps) * pdf(y, 1.0, 1.0 + eps);
        let b = 0.5 * pdf(x, 4.0, eps) * pdf(y, 2.0, 4.0 + eps);
        let p = m.predict_proba(x, y);
        assert!((m.epsilon - eps).abs() < 1e-15);
        assert!((p[0] - a / (a + b)).abs() < 1e-9, "{p:?}");
        assert!((p[1] - b / (a + b)).abs() < 1e-9);
    }

    #[test]
    fn recovers_generator_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sd = 0.01;
        let noise = Normal::new(0.0, sd).unwrap();
        let n = 400;
        let mut pts = Vec::new();
        for _ in 0..n {
            pts.push(LabeledPoint::new(30.0 + noise.sample(&mut rng), 40.0 + noise.sample(&mut rng), A));
            pts.push(LabeledPoint::new(37.0 + noise.sample(&mut rng), 48.0 + noise.sample(&mut rng), B));
        }
        let m = GaussianNb::fit(&pts, &[A, B], NaiveBayesParams::default()).unwrap();
        let tol = 3.0 * sd / (n as f64).sqrt();
        assert!((m.means[0][0] - 30.0).abs() < tol);
        assert!((m.means[0][1] - 40.0).abs() < tol);
        assert!((m.means[1][0] - 37.0).abs() < tol);
        assert!((m.means[1][1] - 48.0).abs() < tol);
        assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.variances.iter().flatten().all(|&v| v >= m.epsilon && m.epsilon > 0.0));
    }

    proptest! {
        #[test]
        fn posterior_sums_to_one(lat in -1e3f64..1e3, lon in -1e3f64..1e3) {
            let pts = [
                LabeledPoint::new(33.0, 44.0, A),
                LabeledPoint::new(33.5, 44.2, A),
                LabeledPoint::new(34.0, 41.0, B),
                LabeledPoint::new(34.2, 42.0, B),
                LabeledPoint::new(35.0, 43.0, B),
            ];
            let m = GaussianNb::fit(&pts, &[A, B], NaiveBayesParams::default()).unwrap();
            let p = m.predict_proba(lat, lon);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
}
