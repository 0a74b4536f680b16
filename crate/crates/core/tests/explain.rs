mod support;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use cardioprev::engine::Engine;
use cardioprev::explain::{build_prompt, ExplainConfig, ExplainMode, Explainer};
use cardioprev::factors::RiskFactor;
use cardioprev::recommend::ExplanationSource;

#[derive(Clone)]
struct Mock {
    reply: Arc<String>,
    hits: Arc<AtomicUsize>,
    last_prompt: Arc<std::sync::Mutex<String>>,
}

async fn completions(State(mock): State<Mock>, Json(body): Json<Value>) -> Json<Value> {
    mock.hits.fetch_add(1, Ordering::SeqCst);
    *mock.last_prompt.lock().unwrap() = body["messages"]
        .as_array()
        .and_then(|m| m.last())
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string();
    Json(json!({"choices": [{"message": {"role": "assistant", "content": *mock.reply}}]}))
}

/// Serves `reply` as a chat-completion answer on a free local port.
async fn mock_endpoint(reply: &str) -> (String, Mock) {
    let mock = Mock {
        reply: Arc::new(reply.to_string()),
        hits: Arc::new(AtomicUsize::new(0)),
        last_prompt: Arc::default(),
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(completions))
        .with_state(mock.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1/chat/completions"), mock)
}

fn engine_for(url: &str) -> Engine {
    let config = ExplainConfig {
        url: Some(url.to_string()),
        timeout: Duration::from_secs(2),
        ..ExplainConfig::default()
    };
    Engine::shipped().with_explainer(Explainer::from_config(&config).unwrap())
}

#[tokio::test]
async fn recorded_response_fills_every_block() {
    let (url, mock) = mock_endpoint(&support::fixture("response-four-factors.md")).await;
    let engine = engine_for(&url);
    let ind = support::questionnaire("four-factors.json");
    let out = engine.recommend(&ind, ExplainMode::Llm).await.unwrap();
    let result = out.explanation.unwrap();
    assert_eq!(result.source, ExplanationSource::Generated);
    assert!(
        result.coverage.unmatched.is_empty(),
        "{:?}",
        result.coverage
    );

    let rec = out.recommendation;
    assert_eq!(rec.blocks.len(), 4);
    for b in &rec.blocks {
        assert_eq!(
            b.expl_source,
            ExplanationSource::Generated,
            "factor {}",
            b.factor
        );
    }
    assert!(rec
        .block(RiskFactor::Smoking)
        .unwrap()
        .expl
        .contains("cigarette"));
    assert!(rec
        .explanation
        .closing
        .as_deref()
        .unwrap()
        .contains("add up"));

    let prompt = build_prompt(&rec.profile, &ind).unwrap();
    assert_eq!(*mock.last_prompt.lock().unwrap(), prompt.text());

    // A second identical request is served from the cache.
    engine.recommend(&ind, ExplainMode::Llm).await.unwrap();
    assert_eq!(mock.hits.load(Ordering::SeqCst), 1);
    engine
        .recommend_with(&ind, ExplainMode::Llm, true)
        .await
        .unwrap();
    assert_eq!(mock.hits.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn category_section_goes_to_the_preamble() {
    let (url, _) = mock_endpoint(&support::fixture("response-with-category.md")).await;
    let engine = engine_for(&url);
    // Family history gates the model, so the category is very high.
    let ind = cardioprev::intake::parse_questionnaire_str(r#"{"x5":1,"x12":150}"#).unwrap();
    let out = engine.recommend(&ind, ExplainMode::Llm).await.unwrap();
    let result = out.explanation.unwrap();
    assert_eq!(result.coverage.matched, vec![5, 9]);
    assert_eq!(result.coverage.extra_sections.len(), 1);
    assert!(out
        .recommendation
        .explanation
        .preamble
        .as_deref()
        .unwrap()
        .contains("middle band"));
}

#[tokio::test]
async fn missing_sections_use_catalog_text() {
    let (url, _) = mock_endpoint(&support::fixture("response-inline-mentions.md")).await;
    let engine = engine_for(&url);
    let ind = support::questionnaire("four-factors.json");
    let out = engine.recommend(&ind, ExplainMode::Llm).await.unwrap();
    let result = out.explanation.unwrap();
    assert_eq!(result.coverage.matched, vec![11, 13]);
    assert_eq!(result.coverage.unmatched, vec![9, 12]);
    assert_eq!(result.coverage.mentioned_inline, vec![9, 12]);
    let rec = out.recommendation;
    assert_eq!(
        rec.block(RiskFactor::Smoking).unwrap().expl_source,
        ExplanationSource::Generated
    );
    let bp = rec.block(RiskFactor::BloodPressure).unwrap();
    assert_eq!(bp.expl_source, ExplanationSource::Fallback);
    assert!(!bp.expl.is_empty());
}

#[tokio::test]
async fn unreachable_endpoint_falls_back() {
    // Bind and drop to get a port nobody listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let engine = engine_for(&format!("http://127.0.0.1:{port}/v1/chat/completions"));
    let ind = support::questionnaire("worked-example.json");
    let out = engine.recommend(&ind, ExplainMode::Llm).await.unwrap();
    let result = out.explanation.unwrap();
    assert_eq!(result.source, ExplanationSource::Fallback);
    assert!(result.error.is_some());
    let fallback = engine.recommend_fallback(&ind).unwrap();
    assert_eq!(
        out.recommendation.to_json_untimed(),
        fallback.to_json_untimed()
    );
}

#[tokio::test]
async fn dosing_advice_is_rejected() {
    let reply =
        "### 1. High blood pressure**\nTake 10 mg of amlodipine daily.\n\n### 2. Smoking**\nStop.";
    let (url, _) = mock_endpoint(reply).await;
    let engine = engine_for(&url);
    let ind = cardioprev::intake::parse_questionnaire_str(r#"{"x12":150,"x15":1}"#).unwrap();
    let out = engine.recommend(&ind, ExplainMode::Llm).await.unwrap();
    let result = out.explanation.unwrap();
    assert_eq!(result.coverage.unmatched, vec![9]);
    assert!(result
        .coverage
        .notes
        .iter()
        .any(|n| n.contains("factor 9 rejected")));
    let rec = out.recommendation;
    assert!(rec.blocks.iter().all(|b| !b.expl.contains("amlodipine")));
    assert_eq!(
        rec.block(RiskFactor::BloodPressure).unwrap().expl_source,
        ExplanationSource::Fallback
    );
    assert_eq!(
        rec.block(RiskFactor::Smoking).unwrap().expl_source,
        ExplanationSource::Generated
    );
}
