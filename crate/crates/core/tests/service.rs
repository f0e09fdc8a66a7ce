use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use gdelt_geoclass::dataset::materialize_combination;
use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::service::{classify_point, router, AppState, ServiceConfig};
use gdelt_geoclass::store::{DatasetStore, ModelStore};
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};
use gdelt_geoclass::{train, Algorithm, BoundingBox, EventClass, Hyperparameters};

struct Fixture {
    _dir: tempfile::TempDir,
    config: ServiceConfig,
    app: Router,
}

fn setup() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture_csv(&FixtureConfig { points: 3_000, ..FixtureConfig::default() }).unwrap();
    let full = ingest(csv.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), "fixture")
        .unwrap()
        .dataset;
    let data_dir = dir.path().join("data");
    let model_dir = dir.path().join("models");
    DatasetStore::new(&data_dir).save(&full).unwrap();
    let pair = materialize_combination(&full, &[EventClass::Refugees, EventClass::ArtilleryFight]).unwrap();
    let model = train(Algorithm::DecisionTree, &pair, &Hyperparameters::default(), 42).unwrap();
    ModelStore::new(&model_dir).save(&model, None).unwrap();
    let config = ServiceConfig {
        model_dir,
        data_dir,
        workers: 1,
        ..ServiceConfig::default()
    };
    let app = router(AppState::new(config.clone()));
    Fixture { _dir: dir, config, app }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_raw(app, method, uri, body.map(|b| b.to_string())).await
}

async fn call_raw(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

#[tokio::test]
async fn health_and_listing() {
    let f = setup();
    let (s, v) = call(&f.app, "GET", "/healthz", None).await;
    assert_eq!((s, v), (StatusCode::OK, Value::String("OK".into())));
    let (s, v) = call(&f.app, "GET", "/api/models", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v[0]["id"], "dt-0-194");
    assert_eq!(v[0]["algorithm"], "decision_tree");
    assert_eq!(v[0]["classes"], json!([0, 194]));
}

#[tokio::test]
async fn listing_an_unreadable_store_is_500() {
    let config = ServiceConfig {
        model_dir: "/nonexistent/geoclass-models".into(),
        ..ServiceConfig::default()
    };
    let app = router(AppState::new(config));
    let (s, v) = call(&app, "GET", "/api/models", None).await;
    assert_eq!(s, StatusCode::INTERNAL_SERVER_ERROR);
    assert!(v["message"].as_str().unwrap().contains("geoclass-models"));
}

#[tokio::test]
async fn classify_matches_the_library() {
    let f = setup();
    let model = ModelStore::new(&f.config.model_dir).load("dt-0-194").unwrap();
    for (lat, lon) in [(36.19, 44.01), (33.42, 43.30), (50.0, 10.0)] {
        let (s, v) = call(
            &f.app,
            "POST",
            "/api/classify",
            Some(json!({"model_id": "dt-0-194", "lat": lat, "lon": lon})),
        )
        .await;
        assert_eq!(s, StatusCode::OK);
        let expected = serde_json::to_value(classify_point(&model, lat, lon, &BoundingBox::IRAQ)).unwrap();
        assert_eq!(v, expected);
        let total: f64 = v["probabilities"].as_array().unwrap().iter().map(|p| p["probability"].as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let (_, v) = call(&f.app, "POST", "/api/classify", Some(json!({"model_id": "dt-0-194", "lat": 50.0, "lon": 10.0}))).await;
    assert_eq!(v["in_bbox"], false);
}

#[tokio::test]
async fn classify_errors() {
    let f = setup();
    let (s, _) = call(&f.app, "POST", "/api/classify", Some(json!({"model_id": "nope", "lat": 33.0, "lon": 44.0}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&f.app, "POST", "/api/classify", Some(json!({"model_id": "dt-0-194", "lat": "x", "lon": 44.0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&f.app, "POST", "/api/classify", Some(json!({"model_id": "dt-0-194", "lon": 44.0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let raw = r#"{"model_id": "dt-0-194", "lat": 1e400, "lon": 44.0}"#;
    let (s, v) = call_raw(&f.app, "POST", "/api/classify", Some(raw.into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
    let (s, _) = call_raw(&f.app, "POST", "/api/classify", Some("not json".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn points_are_a_seeded_sample() {
    let f = setup();
    let (s, v) = call(&f.app, "GET", "/api/points?dataset=full&limit=50", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["total"], 3_000);
    assert_eq!(v["points"].as_array().unwrap().len(), 50);
    let (_, again) = call(&f.app, "GET", "/api/points?dataset=full&limit=50", None).await;
    assert_eq!(v, again);
    let (s, _) = call(&f.app, "GET", "/api/points?dataset=missing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn training_job_lifecycle() {
    let f = setup();
    let (s, v) = call(
        &f.app,
        "POST",
        "/api/train",
        Some(json!({"dataset": "full", "classes": [73, 202], "algorithm": "naive_bayes", "model_id": "nb-test"})),
    )
    .await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    let job = v["job_id"].as_u64().unwrap();

    let mut status = Value::Null;
    for _ in 0..200 {
        let (s, v) = call(&f.app, "GET", &format!("/api/jobs/{job}"), None).await;
        assert_eq!(s, StatusCode::OK);
        status = v;
        if status["status"] == "done" || status["status"] == "failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    assert_eq!(status["status"], "done", "{status}");
    assert!(status["report"]["accuracy"].as_f64().unwrap() > 0.0);

    let (_, models) = call(&f.app, "GET", "/api/models", None).await;
    let ids: Vec<&str> = models.as_array().unwrap().iter().map(|m| m["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["dt-0-194", "nb-test"]);
    assert!(models[1]["metrics"]["accuracy"].is_number());

    let (s, _) = call(&f.app, "POST", "/api/classify", Some(json!({"model_id": "nb-test", "lat": 33.0, "lon": 44.0}))).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn training_requests_are_validated() {
    let f = setup();
    for body in [
        json!({"dataset": "full", "classes": [0], "algorithm": "knn"}),
        json!({"dataset": "full", "classes": [0, 0], "algorithm": "knn"}),
        json!({"dataset": "full", "classes": [0, 99], "algorithm": "knn"}),
        json!({"dataset": "full", "classes": [0, 194], "algorithm": "svm"}),
        json!({"dataset": "full", "classes": [0, 194], "algorithm": "knn", "ratio": 1.5}),
        json!({"dataset": "full", "classes": [0, 194], "algorithm": "knn", "model_id": "../x"}),
    ] {
        let (s, v) = call(&f.app, "POST", "/api/train", Some(body.clone())).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body} -> {v}");
    }
    let (s, _) = call(&f.app, "POST", "/api/train", Some(json!({"dataset": "nope", "classes": [0, 194], "algorithm": "knn"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&f.app, "GET", "/api/jobs/999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}
