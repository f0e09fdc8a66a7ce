//! The experiment grid: every class combination crossed with every algorithm.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{train, Algorithm, Hyperparameters};
use crate::dataset::{enumerate_combinations, materialize_combination, split_train_test, Dataset};
use crate::error::{Error, Result};
use crate::ingest::EventClass;
use crate::metrics::{evaluate, fixed, EvaluationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub ratio: f64,
    pub seed: u64,
    pub stratified: bool,
    pub hyperparameters: Hyperparameters,
    /// 0 lets the thread pool decide.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            sizes: vec![2, 3, 4, 5],
            algorithms: Algorithm::ALL.to_vec(),
            ratio: 0.7,
            seed: 42,
            stratified: false,
            hyperparameters: Hyperparameters::default(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset_id: String,
    pub classes: Vec<EventClass>,
    pub algorithm: Algorithm,
    pub hyperparameters: serde_json::Value,
    pub ratio: f64,
    /// Per-experiment seed, recorded on the trained model.
    pub seed: u64,
    /// Seed of the train/test split, shared by all algorithms on a dataset.
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed {
        train_size: usize,
        report: EvaluationReport,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub outcome: Outcome,
    pub duration_ms: f64,
}

impl ExperimentResult {
    pub fn report(&self) -> Option<&EvaluationReport> {
        match &self.outcome {
            Outcome::Completed { report, .. } => Some(report),
            Outcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridManifest {
    pub config: GridConfig,
    pub full_dataset_hash: String,
    pub dataset_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub manifest: GridManifest,
    /// Canonical order: combination order, then algorithm order.
    pub results: Vec<ExperimentResult>,
}

impl GridResult {
    /// Specs and outcomes, ignoring wall-clock durations.
    pub fn same_metrics(&self, other: &GridResult) -> bool {
        self.results.len() == other.results.len()
            && self
                .results
                .iter()
                .zip(&other.results)
                .all(|(a, b)| a.spec == b.spec && a.outcome == b.outcome)
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.report().is_none()).count()
    }
}

fn hash_seed(parts: &[&str]) -> u64 {
    let digest = Sha256::digest(parts.join("/").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Seed for one (dataset, algorithm) experiment.
pub fn experiment_seed(grid_seed: u64, dataset_id: &str, algorithm: Algorithm) -> u64 {
    hash_seed(&[&grid_seed.to_string(), dataset_id, algorithm.as_str()])
}

/// Seed for a dataset's train/test split.
pub fn split_seed(grid_seed: u64, dataset_id: &str) -> u64 {
    hash_seed(&[&grid_seed.to_string(), dataset_id])
}

fn run_one(data: &Dataset, spec: &ExperimentSpec, config: &GridConfig) -> Outcome {
    let attempt = || -> Result<Outcome> {
        let split = split_train_test(data, spec.ratio, spec.split_seed, config.stratified)?;
        let model = train(spec.algorithm, &split.train, &config.hyperparameters, spec.seed)?;
        let report = evaluate(&model, &split.test)?;
        Ok(Outcome::Completed {
            train_size: split.train.len(),
            report,
        })
    };
    attempt().unwrap_or_else(|e| Outcome::Failed {
        error: e.to_string(),
    })
}

/// Runs enumerate, materialize, split, train and evaluate for every
/// (combination, algorithm) pair. Individual failures are recorded.
pub fn run_grid(full: &Dataset, config: &GridConfig) -> Result<GridResult> {
    if full.is_empty() {
        return Err(Error::EmptyInput);
    }
    if config.algorithms.is_empty() {
        return Err(Error::invalid("no algorithms selected"));
    }
    let combos = enumerate_combinations(&full.classes, &config.sizes)?;
    let datasets = combos
        .subsets
        .iter()
        .map(|s| materialize_combination(full, s))
        .collect::<Result<Vec<_>>>()?;

    let mut specs = Vec::new();
    for (di, d) in datasets.iter().enumerate() {
        for &algorithm in &config.algorithms {
            specs.push((
                di,
                ExperimentSpec {
                    dataset_id: d.id.clone(),
                    classes: d.classes.clone(),
                    algorithm,
                    hyperparameters: config.hyperparameters.for_algorithm(algorithm),
                    ratio: config.ratio,
                    seed: experiment_seed(config.seed, &d.id, algorithm),
                    split_seed: split_seed(config.seed, &d.id),
                },
            ));
        }
    }

    let execute = || -> Vec<ExperimentResult> {
        specs
            .par_iter()
            .map(|(di, spec)| {
                let t0 = Instant::now();
                let outcome = run_one(&datasets[*di], spec, config);
                ExperimentResult {
                    spec: spec.clone(),
                    outcome,
                    duration_ms: t0.elapsed().as_secs_f64() * 1e3,
                }
            })
            .collect()
    };
    let results = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(execute)
    } else {
        execute()
    };

    Ok(GridResult {
        manifest: GridManifest {
            config: config.clone(),
            full_dataset_hash: full.content_hash(),
            dataset_hashes: datasets.iter().map(|d| (d.id.clone(), d.content_hash())).collect(),
        },
        results,
    })
}

/// Re-runs a grid from its manifest after checking the input is the same data.
pub fn rerun_from_manifest(full: &Dataset, manifest: &GridManifest, workers: usize) -> Result<GridResult> {
    let hash = full.content_hash();
    if hash != manifest.full_dataset_hash {
        return Err(Error::invalid(format!(
            "dataset hash {hash} does not match manifest {}",
            manifest.full_dataset_hash
        )));
    }
    let mut config = manifest.config.clone();
    config.workers = workers;
    run_grid(full, &config)
}

/// Highest minimum per-class F1, then highest accuracy, then canonical order.
pub fn select_best(results: &[ExperimentResult]) -> Option<&ExperimentResult> {
    let mut best: Option<(&ExperimentResult, f64, f64)> = None;
    for r in results {
        let Some(rep) = r.report() else { continue };
        let (f1, acc) = (rep.min_f1(), rep.accuracy);
        let better = match best {
            None => true,
            Some((_, bf1, bacc)) => f1 > bf1 || (f1 == bf1 && acc > bacc),
        };
        if better {
            best = Some((r, f1, acc));
        }
    }
    best.map(|b| b.0)
}

fn class_list(classes: &[EventClass]) -> String {
    classes
        .iter()
        .map(|c| format!("{} (event {})", c.description(), c.label()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One table per experiment followed by a ranked summary.
pub fn render_report(grid: &GridResult, with_timings: bool) -> String {
    let mut s = String::new();
    let cfg = &grid.manifest.config;
    let _ = writeln!(
        s,
        "Experiment grid: {} experiments, seed {}, train ratio {}, {}",
        grid.results.len(),
        cfg.seed,
        cfg.ratio,
        if cfg.stratified { "stratified" } else { "unstratified" }
    );
    let _ = writeln!(s, "Input hash: {}\n", grid.manifest.full_dataset_hash);

    for (i, r) in grid.results.iter().enumerate() {
        let title = format!(
            "[{:>3}] Results of the {} algorithm - {}",
            i + 1,
            r.spec.algorithm.title(),
            class_list(&r.spec.classes)
        );
        match &r.outcome {
            Outcome::Completed { report, .. } => {
                let _ = writeln!(s, "{}", report.render(&title));
            }
            Outcome::Failed { error } => {
                let _ = writeln!(s, "{title}\nFAILED: {error}");
            }
        }
        if with_timings {
            let _ = writeln!(s, "Duration: {:.1} ms", r.duration_ms);
        }
        s.push('\n');
    }

    let mut ranked: Vec<&ExperimentResult> = grid.results.iter().filter(|r| r.report().is_some()).collect();
    // stable sort keeps canonical order among equals
    ranked.sort_by(|a, b| {
        let (ra, rb) = (a.report().unwrap(), b.report().unwrap());
        rb.min_f1()
            .total_cmp(&ra.min_f1())
            .then(rb.accuracy.total_cmp(&ra.accuracy))
    });
    let _ = writeln!(s, "Ranking (min per-class F1, then accuracy)");
    let _ = writeln!(s, "{:>4}  {:<20} {:<16} {:>8} {:>8} {:>8}", "rank", "algorithm", "events", "accuracy", "min F1", "macro F1");
    for (i, r) in ranked.iter().enumerate() {
        let rep = r.report().unwrap();
        let _ = writeln!(
            s,
            "{:>4}  {:<20} {:<16} {:>8} {:>8} {:>8}",
            i + 1,
            r.spec.algorithm.as_str(),
            r.spec.dataset_id,
            fixed(rep.accuracy, 4),
            fixed(rep.min_f1(), 2),
            fixed(rep.macro_f1, 2)
        );
    }
    if let Some(best) = select_best(&grid.results) {
        let _ = writeln!(
            s,
            "\nSelected: {} on {{{}}}",
            best.spec.algorithm.title(),
            best.spec.dataset_id
        );
    }
    s
}
