//! HTTP/JSON interface for interactive classification.
//!
//! | method | path                 | purpose                                   |
//! |--------|----------------------|-------------------------------------------|
//! | GET    | `/healthz`           | liveness, body `OK`                       |
//! | GET    | `/api/models`        | metadata of every persisted model         |
//! | POST   | `/api/classify`      | `{model_id, lat, lon}` → label + probabilities |
//! | GET    | `/api/points`        | `?dataset=&limit=` seeded point sample    |
//! | POST   | `/api/train`         | submit a training job, returns its id     |
//! | GET    | `/api/jobs/{id}`     | job status and, once done, its report     |
//!
//! Classification only reads immutable models. Training jobs run on a
//! bounded pool; a finished model is written under the store write lock in
//! the same critical section that marks its job done, so listings never
//! show a model whose job is still running.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock as StdRwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{RwLock, Semaphore};

use crate::classifiers::{model_id, train, Algorithm, Classifier, Hyperparameters, TrainedModel};
use crate::dataset::{materialize_combination, split_train_test, Dataset};
use crate::error::{Error, Result};
use crate::ingest::{BoundingBox, EventClass};
use crate::metrics::{evaluate, EvaluationReport};
use crate::store::{validate_id, DatasetStore, ModelStore, ModelSummary};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub model_dir: PathBuf,
    pub data_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
    pub train_ratio: f64,
    pub bbox: BoundingBox,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            model_dir: "models".into(),
            data_dir: "data".into(),
            workers: 2,
            seed: 42,
            train_ratio: 0.7,
            bbox: BoundingBox::IRAQ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobInfo {
    pub id: u64,
    pub status: JobStatus,
    pub model_id: String,
    pub report: Option<EvaluationReport>,
    pub error: Option<String>,
}

pub struct AppState {
    config: ServiceConfig,
    models: ModelStore,
    datasets: DatasetStore,
    model_cache: StdRwLock<HashMap<String, Arc<TrainedModel>>>,
    dataset_cache: StdRwLock<HashMap<String, Arc<Dataset>>>,
    store_lock: RwLock<()>,
    jobs: Mutex<HashMap<u64, JobInfo>>,
    next_job: AtomicU64,
    pool: Arc<Semaphore>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            models: ModelStore::new(&config.model_dir),
            datasets: DatasetStore::new(&config.data_dir),
            pool: Arc::new(Semaphore::new(config.workers.max(1))),
            config,
            model_cache: StdRwLock::default(),
            dataset_cache: StdRwLock::default(),
            store_lock: RwLock::new(()),
            jobs: Mutex::default(),
            next_job: AtomicU64::new(1),
        })
    }

    async fn model(&self, id: &str) -> std::result::Result<Arc<TrainedModel>, ApiError> {
        if let Some(m) = self.model_cache.read().unwrap().get(id) {
            return Ok(m.clone());
        }
        let _r = self.store_lock.read().await;
        if !self.models.exists(id) {
            return Err(ApiError::NotFound(format!("model `{id}`")));
        }
        let model = Arc::new(self.models.load(id).map_err(ApiError::internal)?);
        self.model_cache
            .write()
            .unwrap()
            .insert(id.to_string(), model.clone());
        Ok(model)
    }

    fn dataset(&self, id: &str) -> std::result::Result<Arc<Dataset>, ApiError> {
        if let Some(d) = self.dataset_cache.read().unwrap().get(id) {
            return Ok(d.clone());
        }
        if !self.datasets.exists(id) {
            return Err(ApiError::NotFound(format!("dataset `{id}`")));
        }
        let d = Arc::new(self.datasets.load(id).map_err(ApiError::internal)?);
        self.dataset_cache
            .write()
            .unwrap()
            .insert(id.to_string(), d.clone());
        Ok(d)
    }

    fn set_job(&self, id: u64, update: impl FnOnce(&mut JobInfo)) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(&id) {
            update(job);
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    InvalidArgument(String),
    Internal(String),
}

impl ApiError {
    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => ApiError::InvalidArgument(m),
            Error::UnknownLabel(_) | Error::Training(_) => ApiError::InvalidArgument(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind, message) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not_found", format!("{m} not found")),
            ApiError::InvalidArgument(m) => (StatusCode::BAD_REQUEST, "invalid_argument", m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
        };
        (status, Json(ErrorBody { error: kind, message })).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> std::result::Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::InvalidArgument(format!("bad request body: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub model_id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbability {
    pub label: u16,
    pub name: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub model_id: String,
    pub label: u16,
    pub class_name: String,
    pub probabilities: Vec<ClassProbability>,
    pub in_bbox: bool,
}

/// What `/api/classify` returns for one model and query point.
pub fn classify_point(model: &TrainedModel, lat: f64, lon: f64, bbox: &BoundingBox) -> ClassifyResponse {
    let label = model.predict(lat, lon);
    let probabilities = model
        .classes()
        .iter()
        .zip(model.predict_proba(lat, lon))
        .map(|(c, p)| ClassProbability {
            label: c.label(),
            name: c.name().to_string(),
            probability: p,
        })
        .collect();
    ClassifyResponse {
        model_id: model.id().to_string(),
        label: label.label(),
        class_name: label.name().to_string(),
        probabilities,
        in_bbox: bbox.contains(lat, lon),
    }
}

async fn health() -> &'static str {
    "OK"
}

async fn list_models(State(state): State<Arc<AppState>>) -> ApiResult<Vec<ModelSummary>> {
    let _r = state.store_lock.read().await;
    state.models.list().map(Json).map_err(|e| {
        ApiError::Internal(format!("cannot read model store {}: {e}", state.models.dir().display()))
    })
}

async fn classify(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<ClassifyResponse> {
    let req: ClassifyRequest = parse_body(&body)?;
    if !req.lat.is_finite() || !req.lon.is_finite() {
        return Err(ApiError::InvalidArgument("coordinates must be finite".into()));
    }
    let model = state.model(&req.model_id).await?;
    Ok(Json(classify_point(&model, req.lat, req.lon, &state.config.bbox)))
}

#[derive(Debug, Deserialize)]
struct PointsQuery {
    dataset: String,
    limit: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointOut {
    pub lat: f64,
    pub lon: f64,
    pub label: u16,
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointsResponse {
    pub dataset: String,
    pub total: usize,
    pub points: Vec<PointOut>,
}

async fn points(
    State(state): State<Arc<AppState>>,
    Query(q): Query<PointsQuery>,
) -> ApiResult<PointsResponse> {
    let data = state.dataset(&q.dataset)?;
    let limit = q.limit.unwrap_or(1_000);
    let points = data
        .downsample(limit, state.config.seed)
        .into_iter()
        .map(|p| PointOut {
            lat: p.lat,
            lon: p.lon,
            label: p.label.label(),
            name: p.label.name().to_string(),
        })
        .collect();
    Ok(Json(PointsResponse {
        dataset: q.dataset,
        total: data.len(),
        points,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRequest {
    pub dataset: String,
    pub classes: Vec<i64>,
    pub algorithm: String,
    #[serde(default)]
    pub hyperparameters: Option<Hyperparameters>,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stratified: bool,
    #[serde(default)]
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainAccepted {
    pub job_id: u64,
    pub model_id: String,
}

struct TrainJob {
    data: Arc<Dataset>,
    classes: Vec<EventClass>,
    algorithm: Algorithm,
    hyper: Hyperparameters,
    ratio: f64,
    seed: u64,
    stratified: bool,
    model_id: String,
}

impl TrainJob {
    fn run(&self) -> Result<(TrainedModel, EvaluationReport)> {
        let subset = materialize_combination(&self.data, &self.classes)?;
        let split = split_train_test(&subset, self.ratio, self.seed, self.stratified)?;
        let model = train(self.algorithm, &split.train, &self.hyper, self.seed)?
            .with_id(&self.model_id)
            .with_timestamp(chrono::Utc::now().to_rfc3339());
        let report = evaluate(&model, &split.test)?;
        Ok((model, report))
    }
}

async fn submit_train(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> std::result::Result<(StatusCode, Json<TrainAccepted>), ApiError> {
    let req: TrainRequest = parse_body(&body)?;
    let algorithm: Algorithm = req.algorithm.parse()?;
    let mut classes = req
        .classes
        .iter()
        .map(|&l| EventClass::from_label(l))
        .collect::<Result<Vec<_>>>()?;
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ApiError::InvalidArgument("at least two distinct classes are required".into()));
    }
    let ratio = req.ratio.unwrap_or(state.config.train_ratio);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ApiError::InvalidArgument(format!("ratio {ratio} is not in (0, 1)")));
    }
    validate_id(&req.dataset)?;
    let data = state.dataset(&req.dataset)?;
    if let Some(c) = classes.iter().find(|c| !data.classes.contains(c)) {
        return Err(ApiError::InvalidArgument(format!(
            "class {} is not present in dataset `{}`",
            c.label(),
            req.dataset
        )));
    }
    let model_id = req
        .model_id
        .clone()
        .unwrap_or_else(|| model_id(algorithm, &crate::dataset::combination_id(&classes)));
    validate_id(&model_id)?;

    let id = state.next_job.fetch_add(1, Ordering::SeqCst);
    state.jobs.lock().unwrap().insert(
        id,
        JobInfo {
            id,
            status: JobStatus::Queued,
            model_id: model_id.clone(),
            report: None,
            error: None,
        },
    );
    let job = TrainJob {
        data,
        classes,
        algorithm,
        hyper: req.hyperparameters.unwrap_or_default(),
        ratio,
        seed: req.seed.unwrap_or(state.config.seed),
        stratified: req.stratified,
        model_id: model_id.clone(),
    };

    let st = state.clone();
    let cached_id = model_id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = st.pool.clone().acquire_owned().await else {
            return;
        };
        st.set_job(id, |j| j.status = JobStatus::Running);
        let outcome = tokio::task::spawn_blocking(move || job.run())
            .await
            .unwrap_or_else(|e| Err(Error::Training(format!("training task panicked: {e}"))));
        let _w = st.store_lock.write().await;
        let saved = outcome.and_then(|(model, report)| {
            st.models.save(&model, Some(&report))?;
            Ok(report)
        });
        st.model_cache.write().unwrap().remove(&cached_id);
        match saved {
            Ok(report) => st.set_job(id, |j| {
                j.status = JobStatus::Done;
                j.report = Some(report);
            }),
            Err(e) => st.set_job(id, |j| {
                j.status = JobStatus::Failed;
                j.error = Some(e.to_string());
            }),
        }
    });

    Ok((StatusCode::ACCEPTED, Json(TrainAccepted { job_id: id, model_id })))
}

async fn job_status(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<JobInfo> {
    state
        .jobs
        .lock()
        .unwrap()
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("job {id}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/api/models", get(list_models))
        .route("/api/classify", post(classify))
        .route("/api/points", get(points))
        .route("/api/train", post(submit_train))
        .route("/api/jobs/{id}", get(job_status))
        .with_state(state)
}

/// Binds `config.addr` and serves until the process is interrupted.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let addr = config.addr;
    let app = router(AppState::new(config));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
