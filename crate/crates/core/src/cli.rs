//! `geoclass` command line.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classifiers::{
    model_id, train, Algorithm, Classifier, Hyperparameters, KnnParams, LogisticParams, NaiveBayesParams,
    TreeParams,
};
use crate::dataset::{
    combination_id, enumerate_combinations, materialize_combination, parse_class_list, split_train_test, Dataset,
};
use crate::error::{Error, Result};
use crate::grid::{render_report, run_grid, select_best, GridConfig};
use crate::ingest::{self, BoundingBox, EventClass, GdeltSchema, RecordFilter};
use crate::metrics::{cross_validate, evaluate};
use crate::service::{serve, ServiceConfig};
use crate::store::{load_dataset, write_atomic, DatasetStore, ModelStore};
use crate::synth::{fixture_csv, FixtureConfig};

#[derive(Debug, Parser)]
#[command(name = "geoclass", version, about = "Classify GDELT event locations")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "train-ratio", global = true, default_value_t = 0.7)]
    pub train_ratio: f64,
    #[arg(long, global = true)]
    pub stratified: bool,
    /// Leave timestamps and timings out of every output.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct FilterArgs {
    #[arg(long, default_value_t = 2012)]
    pub year_min: i32,
    #[arg(long, default_value_t = 2015)]
    pub year_max: i32,
    #[arg(long, default_value = "IZ")]
    pub country: String,
}

impl FilterArgs {
    fn filter(&self) -> Result<RecordFilter> {
        RecordFilter::new(BoundingBox::IRAQ, self.year_min, self.year_max, &self.country)
    }
}

#[derive(Debug, Args, Clone)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub var_smoothing: f64,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
}

impl HyperArgs {
    fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            knn: KnnParams { k: self.k },
            naive_bayes: NaiveBayesParams {
                var_smoothing: self.var_smoothing,
            },
            decision_tree: TreeParams {
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
            },
            logistic_regression: LogisticParams {
                learning_rate: self.learning_rate,
                max_iter: self.max_iter,
                l2: self.l2,
                ..LogisticParams::default()
            },
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, filter and label a GDELT export into a dataset file.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Print the export query for one event class.
    GenQuery {
        /// Class label or source code (0, 73, 145, 194, 202, REF).
        #[arg(long)]
        event: String,
        #[arg(long, default_value_t = 2012)]
        year_min: i32,
        #[arg(long, default_value_t = 2015)]
        year_max: i32,
    },
    /// Write one dataset per class combination plus a manifest.
    Combos {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4])]
        sizes: Vec<usize>,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Train one model on the training split and report on the test split.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        classes: String,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long, default_value = "models")]
        model_dir: PathBuf,
        #[arg(long)]
        model_id: Option<String>,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Evaluate a saved model on the test split of a dataset.
    Eval {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "models")]
        model_dir: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Evaluate on every point of the model's classes instead of the test split.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// k-fold cross-validation.
    Cv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        classes: String,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Run every (combination, algorithm) experiment.
    Grid {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5])]
        sizes: Vec<usize>,
        /// Text report destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Machine-readable results destination.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Predict the class of one location.
    Classify {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "models")]
        model_dir: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        /// Also print class probabilities.
        #[arg(long)]
        proba: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value = "models")]
        model_dir: PathBuf,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
    /// Write the synthetic GDELT-style fixture.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40_000)]
        points: usize,
        #[arg(long, default_value_t = 0.25)]
        label_noise: f64,
    },
}

/// Parses `std::env::args`, runs, and returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn subset(input: &Path, filter: &FilterArgs, classes: &[EventClass]) -> Result<Dataset> {
    let full = load_dataset(input, &filter.filter()?)?;
    materialize_combination(&full, classes)
}

/// Runs one command and returns what it prints on standard output.
pub fn execute(cli: &Cli) -> Result<String> {
    let mut out = String::new();
    match &cli.command {
        Command::Ingest { input, out_dir, filter } => {
            let file = std::fs::File::open(input).map_err(|e| Error::io(input, e))?;
            let res = ingest::ingest(file, &GdeltSchema::default(), &filter.filter()?, &input.display().to_string())?;
            let path = DatasetStore::new(out_dir).save(&res.dataset)?;
            write_atomic(
                &out_dir.join("full.ingest.json"),
                &serde_json::to_vec_pretty(&res.report)?,
            )?;
            let _ = writeln!(out, "{}", res.report);
            let _ = writeln!(out, "wrote {}", path.display());
        }
        Command::GenQuery { event, year_min, year_max } => {
            let class = EventClass::parse(event)?;
            out.push_str(&ingest::generate_query(class, *year_min, *year_max, &BoundingBox::IRAQ)?);
        }
        Command::Combos { input, out_dir, sizes, filter } => {
            let full = load_dataset(input, &filter.filter()?)?;
            let spec = enumerate_combinations(&full.classes, sizes)?;
            let store = DatasetStore::new(out_dir);
            let mut manifests = Vec::new();
            let _ = writeln!(out, "{:<4} {:<18} {:>8}", "no", "events", "records");
            for (i, s) in spec.subsets.iter().enumerate() {
                let d = materialize_combination(&full, s)?;
                store.save(&d)?;
                let _ = writeln!(out, "{:<4} {:<18} {:>8}", i + 1, d.id, d.len());
                manifests.push(d.manifest());
            }
            write_atomic(&out_dir.join("combinations.json"), &serde_json::to_vec_pretty(&manifests)?)?;
            let _ = writeln!(out, "{} combinations written to {}", manifests.len(), out_dir.display());
        }
        Command::Train {
            input,
            classes,
            algorithm,
            model_dir,
            model_id: id,
            hyper,
            filter,
        } => {
            let classes = parse_class_list(classes)?;
            let data = subset(input, filter, &classes)?;
            let split = split_train_test(&data, cli.train_ratio, cli.seed, cli.stratified)?;
            let mut model = train(*algorithm, &split.train, &hyper.hyperparameters(), cli.seed)?;
            if let Some(id) = id {
                model = model.with_id(id);
            }
            if !cli.deterministic {
                model = model.with_timestamp(chrono::Utc::now().to_rfc3339());
            }
            let report = evaluate(&model, &split.test)?;
            let path = ModelStore::new(model_dir).save(&model, Some(&report))?;
            let title = format!("Results of the {} algorithm - {}", algorithm.title(), data.id);
            let _ = writeln!(out, "{}", report.render(&title));
            let _ = writeln!(out, "saved {}", path.display());
        }
        Command::Eval {
            model,
            model_dir,
            input,
            all,
            filter,
        } => {
            let m = ModelStore::new(model_dir).load(model)?;
            let data = subset(input, filter, m.classes())?;
            let test = if *all {
                data
            } else {
                split_train_test(&data, cli.train_ratio, cli.seed, cli.stratified)?.test
            };
            let report = evaluate(&m, &test)?;
            let title = format!("Results of the {} algorithm - {}", m.algorithm().title(), combination_id(m.classes()));
            let _ = writeln!(out, "{}", report.render(&title));
        }
        Command::Cv {
            input,
            classes,
            algorithm,
            folds,
            hyper,
            filter,
        } => {
            let classes = parse_class_list(classes)?;
            let data = subset(input, filter, &classes)?;
            let cv = cross_validate(*algorithm, &data, &hyper.hyperparameters(), *folds, cli.seed)?;
            let _ = writeln!(out, "{} {}-fold cross-validation - {}", algorithm.title(), folds, data.id);
            let _ = writeln!(out, "{cv}");
        }
        Command::Grid {
            input,
            workers,
            sizes,
            out: report_path,
            json,
            hyper,
            filter,
        } => {
            let full = load_dataset(input, &filter.filter()?)?;
            let config = GridConfig {
                sizes: sizes.clone(),
                ratio: cli.train_ratio,
                seed: cli.seed,
                stratified: cli.stratified,
                hyperparameters: hyper.hyperparameters(),
                workers: *workers,
                ..GridConfig::default()
            };
            let mut grid = run_grid(&full, &config)?;
            if cli.deterministic {
                grid.results.iter_mut().for_each(|r| r.duration_ms = 0.0);
            }
            let text = render_report(&grid, !cli.deterministic);
            if let Some(path) = json {
                write_atomic(path, &serde_json::to_vec_pretty(&grid)?)?;
            }
            match report_path {
                Some(path) => {
                    write_atomic(path, text.as_bytes())?;
                    let _ = writeln!(out, "{} experiments, {} failed", grid.results.len(), grid.failures());
                    if let Some(best) = select_best(&grid.results) {
                        let _ = writeln!(out, "Selected: {} on {{{}}}", best.spec.algorithm.title(), best.spec.dataset_id);
                    }
                    let _ = writeln!(out, "report written to {}", path.display());
                }
                None => out.push_str(&text),
            }
        }
        Command::Classify {
            model,
            model_dir,
            lat,
            lon,
            proba,
        } => {
            if !lat.is_finite() || !lon.is_finite() {
                return Err(Error::invalid("coordinates must be finite"));
            }
            let m = ModelStore::new(model_dir).load(model)?;
            let label = m.predict(*lat, *lon);
            let _ = writeln!(out, "{} {}", label.label(), label.name());
            if *proba {
                for (c, p) in m.classes().iter().zip(m.predict_proba(*lat, *lon)) {
                    let _ = writeln!(out, "  {:<4} {:<18} {:.4}", c.label(), c.name(), p);
                }
            }
        }
        Command::Serve {
            addr,
            model_dir,
            data_dir,
            workers,
        } => {
            let config = ServiceConfig {
                addr: *addr,
                model_dir: model_dir.clone(),
                data_dir: data_dir.clone(),
                workers: *workers,
                seed: cli.seed,
                train_ratio: cli.train_ratio,
                bbox: BoundingBox::IRAQ,
            };
            tokio::runtime::Runtime::new()
                .map_err(|e| Error::io("<runtime>", e))?
                .block_on(serve(config))?;
        }
        Command::Fixture { out: path, points, label_noise } => {
            let cfg = FixtureConfig {
                points: *points,
                label_noise: *label_noise,
                seed: cli.seed,
                ..FixtureConfig::default()
            };
            write_atomic(path, &fixture_csv(&cfg)?)?;
            let _ = writeln!(out, "wrote {} rows to {}", points, path.display());
        }
    }
    Ok(out)
}

/// Default model id for a training run, as `train` would pick it.
pub fn default_model_id(algorithm: Algorithm, classes: &[EventClass]) -> String {
    model_id(algorithm, &combination_id(classes))
}
