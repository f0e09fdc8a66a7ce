//! Drives the HTTP API in-process: trains a model through `/api/train`,
//! waits for the job, then classifies a few city locations.

use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use gdelt_geoclass::ingest::{ingest, GdeltSchema, RecordFilter};
use gdelt_geoclass::service::{router, AppState, ServiceConfig};
use gdelt_geoclass::store::DatasetStore;
use gdelt_geoclass::synth::{fixture_csv, FixtureConfig};

async fn send(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap_or(Value::Null)
}

#[tokio::main]
async fn main() -> gdelt_geoclass::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| gdelt_geoclass::Error::Io { path: "tempdir".into(), source: e })?;
    let csv = fixture_csv(&FixtureConfig { points: 10_000, ..FixtureConfig::default() })?;
    let full = ingest(csv.as_slice(), &GdeltSchema::default(), &RecordFilter::iraq(), "fixture")?.dataset;
    DatasetStore::new(dir.path().join("data")).save(&full)?;

    let app = router(AppState::new(ServiceConfig {
        model_dir: dir.path().join("models"),
        data_dir: dir.path().join("data"),
        ..ServiceConfig::default()
    }));

    let job = send(&app, "POST", "/api/train", Some(json!({"dataset": "full", "classes": [0, 194], "algorithm": "decision_tree"}))).await;
    println!("submitted: {job}");
    let id = job["job_id"].as_u64().unwrap_or(0);
    loop {
        let status = send(&app, "GET", &format!("/api/jobs/{id}"), None).await;
        if status["status"] != "queued" && status["status"] != "running" {
            println!("job {}: accuracy {}", status["status"], status["report"]["accuracy"]);
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }

    for (name, lat, lon) in [("Erbil", 36.1911, 44.0092), ("Ramadi", 33.4258, 43.2992), ("Damascus", 33.5138, 36.2765)] {
        let r = send(&app, "POST", "/api/classify", Some(json!({"model_id": "dt-0-194", "lat": lat, "lon": lon}))).await;
        println!("{name:<9} -> {} {} (in box: {})", r["label"], r["class_name"], r["in_bbox"]);
    }
    Ok(())
}
