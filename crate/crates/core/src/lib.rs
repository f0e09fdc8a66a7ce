//! Geospatial classifiers for violence-related GDELT events.
//!
//! The pipeline runs from a GDELT-format CSV export to a deployed model:
//!
//! 1. [`ingest`] parses the export, keeps rows inside the study box and
//!    year range, and encodes the CAMEO/actor codes into [`EventClass`] labels.
//! 2. [`dataset`] enumerates class-subset combinations and produces seeded
//!    train/test splits.
//! 3. [`classifiers`] fits KNN (k-d tree backed), Gaussian naive Bayes, a
//!    CART decision tree and softmax logistic regression over (lat, lon).
//! 4. [`metrics`] scores models with confusion matrices, per-class
//!    precision/recall/F1 and k-fold cross-validation.
//! 5. [`grid`] runs every combination against every algorithm and picks the
//!    model to deploy.
//! 6. [`service`] serves classification over HTTP/JSON.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod ingest;
pub mod metrics;
pub mod service;
pub mod store;
pub mod synth;

pub use classifiers::{train, Algorithm, Classifier, Hyperparameters, TrainedModel};
pub use dataset::{Dataset, LabeledPoint};
pub use error::{Error, Result};
pub use ingest::{BoundingBox, EventClass};
pub use metrics::{evaluate, EvaluationReport};
