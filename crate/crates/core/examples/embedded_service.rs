//! Starts the HTTP service on a free port, calls it once and stops.
//!
//!     cargo run --example embedded_service

use std::sync::Arc;

use cardioprev::engine::Engine;
use cardioprev::service::{router, AppState, MemoryStore};

#[tokio::main]
async fn main() {
    let app = router(AppState::new(
        Engine::shipped(),
        Arc::new(MemoryStore::new()),
    ));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let server = tokio::spawn(async move { axum::serve(listener, app).await });

    let http = reqwest::Client::new();
    let created: serde_json::Value = http
        .post(format!("{base}/recommend"))
        .body(r#"{"x2":63,"x11":3.9,"x12":145,"x15":1}"#)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = created["id"].as_str().unwrap();
    println!(
        "stored {id}, category {}",
        created["recommendation"]["profile"]["category"]
    );

    let stored: serde_json::Value = http
        .get(format!("{base}/assessments/{id}"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!(
        "read back {} blocks",
        stored["recommendation"]["blocks"].as_array().unwrap().len()
    );
    let health: serde_json::Value = http
        .get(format!("{base}/health"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("health {health}");
    server.abort();
}
