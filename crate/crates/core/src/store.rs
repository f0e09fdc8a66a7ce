//! On-disk model and dataset stores.
//!
//! Every write goes through a temporary file in the destination directory
//! followed by a rename, so readers see either the old file or the new one
//! and a failed write leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{deserialize_model, format::read_header, serialize_model, Algorithm, TrainedModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ingest::{self, EventClass, GdeltSchema, RecordFilter};
use crate::metrics::EvaluationReport;

pub const MODEL_EXT: &str = "model";
pub const REPORT_SUFFIX: &str = ".report.json";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Ids become file names, so only a conservative alphabet is allowed.
pub fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("invalid id `{id}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub accuracy: f64,
    pub min_f1: f64,
    pub macro_f1: f64,
    pub test_instances: usize,
}

impl From<&EvaluationReport> for MetricsSummary {
    fn from(r: &EvaluationReport) -> Self {
        Self {
            accuracy: r.accuracy,
            min_f1: r.min_f1(),
            macro_f1: r.macro_f1,
            test_instances: r.test_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub algorithm: Algorithm,
    pub classes: Vec<EventClass>,
    pub dataset_id: String,
    pub trained_at: Option<String>,
    pub metrics: Option<MetricsSummary>,
}

/// Directory of `<id>.model` files with optional `<id>.report.json` sidecars.
#[derive(Debug, Clone)]
pub struct ModelStore {
    dir: PathBuf,
}

impl ModelStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn model_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.{MODEL_EXT}"))
    }

    fn report_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}{REPORT_SUFFIX}"))
    }

    /// Writes the report first so a visible model always has its report.
    pub fn save(&self, model: &TrainedModel, report: Option<&EvaluationReport>) -> Result<PathBuf> {
        validate_id(model.id())?;
        if let Some(r) = report {
            write_atomic(&self.report_path(model.id()), &serde_json::to_vec_pretty(r)?)?;
        }
        let path = self.model_path(model.id());
        write_atomic(&path, &serialize_model(model))?;
        Ok(path)
    }

    pub fn load(&self, id: &str) -> Result<TrainedModel> {
        validate_id(id)?;
        let path = self.model_path(id);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        deserialize_model(&bytes)
    }

    pub fn exists(&self, id: &str) -> bool {
        validate_id(id).is_ok() && self.model_path(id).is_file()
    }

    pub fn report(&self, id: &str) -> Option<EvaluationReport> {
        let bytes = fs::read(self.report_path(id)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Summaries of every readable model, sorted by id.
    pub fn list(&self) -> Result<Vec<ModelSummary>> {
        let entries = fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.dir, e))?;
            let path = entry.path();
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with('.') || path.extension().and_then(|e| e.to_str()) != Some(MODEL_EXT) {
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let Ok(h) = read_header(&bytes) else {
                continue;
            };
            let metrics = self.report(&h.id).as_ref().map(MetricsSummary::from);
            out.push(ModelSummary {
                id: h.id,
                algorithm: h.algorithm,
                classes: h.classes,
                dataset_id: h.dataset_id,
                trained_at: h.trained_at,
                metrics,
            });
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}

/// Directory of `<id>.csv` datasets in `lat,lon,label` form.
#[derive(Debug, Clone)]
pub struct DatasetStore {
    dir: PathBuf,
}

impl DatasetStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.csv"))
    }

    pub fn exists(&self, id: &str) -> bool {
        validate_id(id).is_ok() && self.path(id).is_file()
    }

    pub fn load(&self, id: &str) -> Result<Dataset> {
        validate_id(id)?;
        let path = self.path(id);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Dataset::read_csv(id, file)?.with_provenance(path.display().to_string()))
    }

    pub fn save(&self, data: &Dataset) -> Result<PathBuf> {
        validate_id(&data.id)?;
        let path = self.path(&data.id);
        write_atomic(&path, &data.to_csv_bytes())?;
        Ok(path)
    }
}

/// Loads either a GDELT export (filtered with `filter`) or a `lat,lon,label`
/// dataset file, deciding by the header row.
pub fn load_dataset(path: &Path, filter: &RecordFilter) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyInput);
    }
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let header: Vec<&str> = std::str::from_utf8(first)
        .unwrap_or_default()
        .trim_end_matches('\r')
        .split(',')
        .map(str::trim)
        .collect();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    if ingest::is_gdelt_header(&header, &GdeltSchema::default()) {
        let out = ingest::ingest(bytes.as_slice(), &GdeltSchema::default(), filter, &path.display().to_string())?;
        Ok(out.dataset)
    } else {
        Ok(Dataset::read_csv(id, bytes.as_slice())?.with_provenance(path.display().to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, Hyperparameters};
    use crate::dataset::LabeledPoint;

    fn model(id: &str) -> TrainedModel {
        let d = Dataset::from_points(
            "0-194",
            vec![
                LabeledPoint::new(36.0, 44.0, EventClass::Refugees),
                LabeledPoint::new(33.0, 43.0, EventClass::ArtilleryFight),
            ],
        );
        train(Algorithm::DecisionTree, &d, &Hyperparameters::default(), 1)
            .unwrap()
            .with_id(id)
    }

    #[test]
    fn save_list_load() {
        let dir = tempfile::tempdir().unwrap();
        let store = ModelStore::new(dir.path());
        assert!(store.list().unwrap().is_empty());
        store.save(&model("b-model"), None).unwrap();
        store.save(&model("a-model"), None).unwrap();
        fs::write(dir.path().join(".tmp-partial"), b"junk").unwrap();
        let ids: Vec<_> = store.list().unwrap().into_iter().map(|m| m.id).collect();
        assert_eq!(ids, ["a-model", "b-model"]);
        assert_eq!(store.load("a-model").unwrap().id(), "a-model");
        assert!(store.load("missing").is_err());
        assert!(store.load("../etc/passwd").is_err());
    }

    #[test]
    fn unreadable_store_is_an_error() {
        let store = ModelStore::new("/nonexistent/geoclass-store");
        assert!(store.list().is_err());
    }
}
