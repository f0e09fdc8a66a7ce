//! Confusion matrices, accuracy, per-class precision/recall/F1 and k-fold
//! cross-validation.
//!
//! Zero divisions resolve to 0: a class that is never predicted has
//! precision 0, a class absent from the test set has recall 0, and F1 is 0
//! when precision and recall are both 0.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::classifiers::{train, Algorithm, Classifier, Hyperparameters};
use crate::dataset::{permutation, Dataset};
use crate::error::{Error, Result};
use crate::ingest::EventClass;

/// `counts[i][j]`: points of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<EventClass>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<EventClass>) -> Self {
        let k = classes.len();
        Self {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: Vec<EventClass>, counts: Vec<Vec<usize>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::invalid(format!("confusion matrix must be {k}x{k}")));
        }
        Ok(Self { classes, counts })
    }

    fn index(&self, c: EventClass) -> Result<usize> {
        self.classes
            .iter()
            .position(|&x| x == c)
            .ok_or_else(|| Error::invalid(format!("class {} is not in the matrix", c.label())))
    }

    pub fn record(&mut self, truth: EventClass, predicted: EventClass) -> Result<()> {
        let (i, j) = (self.index(truth)?, self.index(predicted)?);
        self.counts[i][j] += 1;
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> usize {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: EventClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class: Vec<ClassReport>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvaluationReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let total = confusion.total();
        if total == 0 {
            return Err(Error::invalid("empty test set"));
        }
        let per_class: Vec<ClassReport> = confusion
            .classes
            .iter()
            .enumerate()
            .map(|(i, &class)| {
                let tp = confusion.counts[i][i];
                let precision = ratio(tp, confusion.col_sum(i));
                let recall = ratio(tp, confusion.row_sum(i));
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassReport {
                    class,
                    precision,
                    recall,
                    f1,
                    support: confusion.row_sum(i),
                }
            })
            .collect();
        let k = per_class.len() as f64;
        let mean = |f: fn(&ClassReport) -> f64| per_class.iter().map(f).sum::<f64>() / k;
        Ok(Self {
            accuracy: ratio(confusion.trace(), total),
            macro_precision: mean(|r| r.precision),
            macro_recall: mean(|r| r.recall),
            macro_f1: mean(|r| r.f1),
            per_class,
            confusion,
        })
    }

    /// Smallest per-class F1; the model-selection criterion.
    pub fn min_f1(&self) -> f64 {
        self.per_class
            .iter()
            .map(|r| r.f1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn class(&self, c: EventClass) -> Option<&ClassReport> {
        self.per_class.iter().find(|r| r.class == c)
    }

    pub fn test_size(&self) -> usize {
        self.confusion.total()
    }

    /// Plain-text table: one row per class, values rounded for display.
    pub fn render(&self, title: &str) -> String {
        let mut s = String::new();
        if !title.is_empty() {
            let _ = writeln!(s, "{title}");
        }
        let _ = writeln!(s, "+-------+-----------+--------+----------+---------+");
        let _ = writeln!(s, "| Event | Precision | Recall | F1-score | Support |");
        let _ = writeln!(s, "+-------+-----------+--------+----------+---------+");
        for r in &self.per_class {
            let _ = writeln!(
                s,
                "| {:>5} | {:>9} | {:>6} | {:>8} | {:>7} |",
                r.class.label(),
                fixed(r.precision, 2),
                fixed(r.recall, 2),
                fixed(r.f1, 2),
                r.support
            );
        }
        let _ = writeln!(s, "+-------+-----------+--------+----------+---------+");
        let _ = write!(
            s,
            "Accuracy: {}  (test instances: {})",
            fixed(self.accuracy, 4),
            self.test_size()
        );
        s
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(""))
    }
}

/// Round half away from zero at `digits` decimals.
pub fn round_half_up(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    let y = x * scale;
    // nudge values like 0.665 whose binary form sits just under the midpoint
    let nudged = y + y.signum() * 1e-9;
    nudged.round() / scale
}

/// [`round_half_up`] rendered with exactly `digits` decimals.
pub fn fixed(x: f64, digits: u32) -> String {
    format!("{:.*}", digits as usize, round_half_up(x, digits))
}

/// Scores `model` on `test`.
pub fn evaluate<M: Classifier + ?Sized>(model: &M, test: &Dataset) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::invalid(format!("test set `{}` is empty", test.id)));
    }
    let classes = model.classes().to_vec();
    if let Some(p) = test.points.iter().find(|p| !classes.contains(&p.label)) {
        return Err(Error::invalid(format!(
            "test class {} is unknown to the model",
            p.label.label()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for p in &test.points {
        cm.record(p.label, model.predict(p.lat, p.lon))?;
    }
    EvaluationReport::from_confusion(cm)
}

/// Seeded fold membership: sizes differ by at most one.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::invalid(format!("{folds} folds exceed {n} points")));
    }
    let perm = permutation(n, seed);
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(perm[at..at + size].to_vec());
        at += size;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<EvaluationReport>,
    pub mean_accuracy: f64,
    /// Population standard deviation across folds.
    pub std_accuracy: f64,
}

impl fmt::Display for CrossValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.folds.iter().enumerate() {
            writeln!(
                f,
                "fold {:>2}: accuracy {} ({} instances)",
                i + 1,
                fixed(r.accuracy, 4),
                r.test_size()
            )?;
        }
        write!(
            f,
            "mean accuracy {} ± {}",
            fixed(self.mean_accuracy, 4),
            fixed(self.std_accuracy, 4)
        )
    }
}

/// k-fold cross-validation; every point is tested exactly once.
pub fn cross_validate(
    algorithm: Algorithm,
    data: &Dataset,
    hyper: &Hyperparameters,
    folds: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let parts = fold_indices(data.len(), folds, seed)?;
    let mut reports = Vec::with_capacity(folds);
    for (f, test_idx) in parts.iter().enumerate() {
        let train_idx: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        let train_set = data.select(format!("{}.train", data.id), &train_idx);
        let test_set = data.select(format!("{}.fold{f}", data.id), test_idx);
        let model = train(algorithm, &train_set, hyper, seed)?;
        reports.push(evaluate(&model, &test_set)?);
    }
    let n = reports.len() as f64;
    let mean = reports.iter().map(|r| r.accuracy).sum::<f64>() / n;
    let var = reports.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n;
    Ok(CrossValidation {
        folds: reports,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledPoint;
    use proptest::prelude::*;
    use EventClass::{ArtilleryFight as B, Refugees as A};

    #[test]
    fn fixture_matrix() {
        let cm = ConfusionMatrix::from_counts(vec![A, B], vec![vec![3, 1], vec![2, 4]]).unwrap();
        let r = EvaluationReport::from_confusion(cm).unwrap();
        assert!((r.accuracy - 0.7).abs() < 1e-12);
        let c0 = r.per_class[0];
        assert!((c0.precision - 0.6).abs() < 1e-12);
        assert!((c0.recall - 0.75).abs() < 1e-12);
        assert!((c0.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c0.support, 4);
        let c1 = r.per_class[1];
        assert!((c1.precision - 0.8).abs() < 1e-12);
        assert!((c1.recall - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_division_convention() {
        let cm = ConfusionMatrix::from_counts(vec![A, B], vec![vec![85, 0], vec![15, 0]]).unwrap();
        let r = EvaluationReport::from_confusion(cm).unwrap();
        assert_eq!(r.per_class[1].precision, 0.0);
        assert_eq!(r.per_class[1].recall, 0.0);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert_eq!(r.min_f1(), 0.0);
        assert!(r.render("").contains("|   194 |      0.00 |   0.00 |     0.00 |      15 |"));
        assert!(EvaluationReport::from_confusion(ConfusionMatrix::new(vec![A, B])).is_err());
    }

    #[test]
    fn rounding_for_display() {
        assert_eq!(fixed(0.7629, 4), "0.7629");
        assert_eq!(fixed(0.745, 2), "0.75");
        assert_eq!(fixed(0.665, 2), "0.67");
        assert_eq!(fixed(2.0 / 3.0, 4), "0.6667");
        assert_eq!(fixed(0.0, 2), "0.00");
    }

    #[test]
    fn folds_partition() {
        let folds = fold_indices(26_723, 10, 42).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2672 || f.len() == 2673));
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..26_723).collect::<Vec<_>>());
        assert!(fold_indices(10, 1, 0).is_err());
        assert!(fold_indices(3, 4, 0).is_err());
    }

    #[test]
    fn leave_one_out_one_nn() {
        // A at 0, 1.2, 5; B at 2.5, 6, 6.8 on a line; 1-NN LOO by hand:
        // 0->1.2 ok, 1.2->0 ok, 5->6 wrong, 2.5->1.2 wrong, 6->6.8 ok, 6.8->6 ok
        let lat = [0.0, 1.2, 5.0, 2.5, 6.0, 6.8];
        let lab = [A, A, A, B, B, B];
        let pts = lat.iter().zip(lab).map(|(&x, c)| LabeledPoint::new(x, 0.0, c)).collect();
        let d = Dataset::from_points("loo", pts);
        let mut h = Hyperparameters::default();
        h.knn.k = 1;
        let cv = cross_validate(Algorithm::Knn, &d, &h, 6, 1).unwrap();
        assert_eq!(cv.folds.len(), 6);
        assert!((cv.mean_accuracy - 4.0 / 6.0).abs() < 1e-12);
    }

    fn arb_matrix() -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::collection::vec(0usize..50, 3), 3)
            .prop_filter("non-empty", |m| m.iter().flatten().sum::<usize>() > 0)
    }

    proptest! {
        #[test]
        fn report_identities(m in arb_matrix()) {
            let classes = vec![A, B, EventClass::MassKilling];
            let cm = ConfusionMatrix::from_counts(classes, m).unwrap();
            let r = EvaluationReport::from_confusion(cm.clone()).unwrap();
            // micro recall == accuracy
            let tp: usize = (0..3).map(|i| cm.counts[i][i]).sum();
            let fn_: usize = (0..3).map(|i| cm.row_sum(i) - cm.counts[i][i]).sum();
            prop_assert!((tp as f64 / (tp + fn_) as f64 - r.accuracy).abs() < 1e-12);
            for c in &r.per_class {
                prop_assert!((0.0..=1.0).contains(&c.f1));
                if c.precision + c.recall > 0.0 {
                    prop_assert!(c.f1 >= c.precision.min(c.recall) - 1e-12);
                    prop_assert!(c.f1 <= c.precision.max(c.recall) + 1e-12);
                }
            }
        }

        #[test]
        fn relabeling_permutes_report(a in 0usize..40, b in 0usize..40, c in 0usize..40, d in 1usize..40) {
            let fwd = EvaluationReport::from_confusion(
                ConfusionMatrix::from_counts(vec![A, B], vec![vec![a, b], vec![c, d]]).unwrap()).unwrap();
            let rev = EvaluationReport::from_confusion(
                ConfusionMatrix::from_counts(vec![B, A], vec![vec![d, c], vec![b, a]]).unwrap()).unwrap();
            prop_assert_eq!(fwd.accuracy, rev.accuracy);
            prop_assert_eq!(fwd.per_class[0], rev.per_class[1]);
            prop_assert_eq!(fwd.per_class[1], rev.per_class[0]);
        }
    }
}
