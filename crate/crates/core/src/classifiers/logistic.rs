//! Multinomial (softmax) logistic regression fit by full-batch gradient
//! descent on standardized features.
//!
//! The objective is the mean cross-entropy plus `λ / (2n) · Σ‖w_c‖²`
//! (biases are not penalized), which is the usual `C = 1/λ` parameterization.

use serde::{Deserialize, Serialize};

use super::{class_index, Classifier};
use crate::dataset::LabeledPoint;
use crate::error::Result;
use crate::ingest::EventClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            learning_rate: 0.1,
            max_iter: 1000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl Standardizer {
    pub fn fit(x: &[[f64; 2]]) -> Self {
        let n = x.len() as f64;
        let mut mean = [0.0; 2];
        for v in x {
            mean[0] += v[0] / n;
            mean[1] += v[1] / n;
        }
        let mut var = [0.0; 2];
        for v in x {
            var[0] += (v[0] - mean[0]).powi(2) / n;
            var[1] += (v[1] - mean[1]).powi(2) / n;
        }
        let sd = |v: f64| if v > 0.0 { v.sqrt() } else { 1.0 };
        Self {
            mean,
            std: [sd(var[0]), sd(var[1])],
        }
    }

    pub fn identity() -> Self {
        Self {
            mean: [0.0; 2],
            std: [1.0; 2],
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (v[0] - self.mean[0]) / self.std[0],
            (v[1] - self.mean[1]) / self.std[1],
        ]
    }
}

/// Number of parameters per class: two weights and a bias.
pub const PARAMS_PER_CLASS: usize = 3;

fn softmax_into(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Regularized loss and its gradient.
///
/// `params` is laid out as `[w_c0, w_c1, b_c]` for each class in turn; `x`
/// must already be standardized and `y` holds class indices.
pub fn loss_and_gradient(params: &[f64], x: &[[f64; 2]], y: &[usize], l2: f64) -> (f64, Vec<f64>) {
    let k = params.len() / PARAMS_PER_CLASS;
    let n = x.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let mut z = vec![0.0; k];
    for (xi, &yi) in x.iter().zip(y) {
        for c in 0..k {
            let p = &params[c * PARAMS_PER_CLASS..];
            z[c] = p[0] * xi[0] + p[1] * xi[1] + p[2];
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[yi];
        for c in 0..k {
            let r = (z[c] - lse).exp() - if c == yi { 1.0 } else { 0.0 };
            let g = &mut grad[c * PARAMS_PER_CLASS..];
            g[0] += r * xi[0];
            g[1] += r * xi[1];
            g[2] += r;
        }
    }
    loss /= n;
    let mut penalty = 0.0;
    for c in 0..k {
        let base = c * PARAMS_PER_CLASS;
        for f in 0..2 {
            let w = params[base + f];
            penalty += w * w;
            grad[base + f] = grad[base + f] / n + l2 * w / n;
        }
        grad[base + 2] /= n;
    }
    (loss + 0.5 * l2 * penalty / n, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub params: LogisticParams,
    pub classes: Vec<EventClass>,
    pub weights: Vec<[f64; 2]>,
    pub biases: Vec<f64>,
    pub standardizer: Standardizer,
    /// Gradient-descent steps actually taken.
    pub iterations: usize,
}

impl LogisticModel {
    pub fn fit(points: &[LabeledPoint], classes: &[EventClass], params: LogisticParams) -> Result<Self> {
        let raw: Vec<[f64; 2]> = points.iter().map(LabeledPoint::features).collect();
        let standardizer = Standardizer::fit(&raw);
        let x: Vec<[f64; 2]> = raw.iter().map(|v| standardizer.apply(*v)).collect();
        let y = points
            .iter()
            .map(|p| class_index(classes, p.label))
            .collect::<Result<Vec<_>>>()?;

        let mut theta = vec![0.0; classes.len() * PARAMS_PER_CLASS];
        let mut iterations = 0;
        for _ in 0..params.max_iter {
            let (_, grad) = loss_and_gradient(&theta, &x, &y, params.l2);
            let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if gmax < params.tolerance {
                break;
            }
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= params.learning_rate * g;
            }
            iterations += 1;
        }

        let weights = theta
            .chunks(PARAMS_PER_CLASS)
            .map(|c| [c[0], c[1]])
            .collect();
        let biases = theta.chunks(PARAMS_PER_CLASS).map(|c| c[2]).collect();
        Ok(Self {
            params,
            classes: classes.to_vec(),
            weights,
            biases,
            standardizer,
            iterations,
        })
    }

    /// Model assembled from explicit parameters.
    pub fn from_parts(
        classes: Vec<EventClass>,
        weights: Vec<[f64; 2]>,
        biases: Vec<f64>,
        standardizer: Standardizer,
    ) -> Self {
        Self {
            params: LogisticParams::default(),
            classes,
            weights,
            biases,
            standardizer,
            iterations: 0,
        }
    }

    fn scores(&self, lat: f64, lon: f64) -> Vec<f64> {
        let x = self.standardizer.apply([lat, lon]);
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w[0] * x[0] + w[1] * x[1] + b)
            .collect()
    }
}

impl Classifier for LogisticModel {
    fn classes(&self) -> &[EventClass] {
        &self.classes
    }

    fn predict(&self, lat: f64, lon: f64) -> EventClass {
        let z = self.scores(lat, lon);
        let mut best = 0;
        for (i, v) in z.iter().enumerate() {
            if *v > z[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    fn predict_proba(&self, lat: f64, lon: f64) -> Vec<f64> {
        let mut z = self.scores(lat, lon);
        softmax_into(&mut z);
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use EventClass::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = LogisticModel::from_parts(
            vec![Refugees, ArtilleryFight],
            vec![[0.0; 2]; 2],
            vec![0.0; 2],
            Standardizer::identity(),
        );
        assert_eq!(m.predict_proba(33.0, 44.0), vec![0.5, 0.5]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<[f64; 2]> = (0..40)
            .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let y: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
        let theta: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, g) = loss_and_gradient(&theta, &x, &y, 0.7);
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (loss_and_gradient(&up, &x, &y, 0.7).0 - loss_and_gradient(&dn, &x, &y, 0.7).0) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1e-3), "param {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn separable_clusters() {
        let mut pts = Vec::new();
        for i in 0..50 {
            let d = i as f64 * 0.01;
            pts.push(LabeledPoint::new(30.0 + d, 40.0 + d, Refugees));
            pts.push(LabeledPoint::new(36.0 + d, 47.0 - d, MassKilling));
        }
        let m = LogisticModel::fit(&pts, &[Refugees, MassKilling], LogisticParams::default()).unwrap();
        assert_eq!(m.predict(30.2, 40.2), Refugees);
        assert_eq!(m.predict(36.2, 46.8), MassKilling);
        assert!(m.iterations > 0);
        let p = m.predict_proba(33.0, 44.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
