//! HTTP front end.
//!
//! | method | path                  | body / query                       |
//! |--------|-----------------------|------------------------------------|
//! | POST   | `/assess`             | questionnaire                      |
//! | POST   | `/recommend`          | questionnaire, `?explain=llm\|fallback` |
//! | GET    | `/assessments/{id}`   |                                    |
//! | GET    | `/health`             |                                    |
//! | GET    | `/catalog/version`    |                                    |
//! | POST   | `/catalog/reload`     |                                    |
//!
//! No authentication: put it behind something that has it before storing
//! real health data.

pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::catalog::Catalog;
use crate::engine::Engine;
use crate::explain::{ExplainConfig, ExplainMode, Explainer};
use crate::factors::Thresholds;
use crate::intake::{parse_questionnaire_str, IntakeError};
use crate::recommend::ENGINE_VERSION;
use crate::risk::RiskCalibration;

pub use store::{AssessmentStore, JsonlStore, MemoryStore, StoreError, StoredAssessment};

/// Where the service gets its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// JSON-lines store; in memory when absent.
    pub store_path: Option<PathBuf>,
    pub catalog_path: Option<PathBuf>,
    pub calibration_path: Option<PathBuf>,
    pub region: Option<String>,
    #[serde(skip)]
    pub explain: ExplainConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store_path: None,
            catalog_path: None,
            calibration_path: None,
            region: None,
            explain: ExplainConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// Overrides fields from `CARDIOPREV_LISTEN`, `CARDIOPREV_STORE`,
    /// `CARDIOPREV_CATALOG`, `CARDIOPREV_CALIBRATION`, `CARDIOPREV_REGION`
    /// and the explanation endpoint variables.
    pub fn apply_env(mut self) -> Result<Self, String> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        if let Some(l) = var("CARDIOPREV_LISTEN") {
            self.listen = l.parse().map_err(|e| format!("CARDIOPREV_LISTEN: {e}"))?;
        }
        if let Some(p) = var("CARDIOPREV_STORE") {
            self.store_path = Some(p.into());
        }
        if let Some(p) = var("CARDIOPREV_CATALOG") {
            self.catalog_path = Some(p.into());
        }
        if let Some(p) = var("CARDIOPREV_CALIBRATION") {
            self.calibration_path = Some(p.into());
        }
        if let Some(r) = var("CARDIOPREV_REGION") {
            self.region = Some(r);
        }
        self.explain = ExplainConfig::from_env();
        Ok(self)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("calibration: {0}")]
    Calibration(#[from] crate::risk::CalibrationError),
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("explanation endpoint: {0}")]
    Explain(#[from] crate::explain::GenerationError),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared state behind every handler.
#[derive(Clone)]
pub struct AppState {
    engine: Engine,
    store: Arc<dyn AssessmentStore>,
    catalog_path: Option<PathBuf>,
    /// Set while no usable catalog is loaded.
    catalog_error: Arc<RwLock<Option<String>>>,
}

impl AppState {
    pub fn new(engine: Engine, store: Arc<dyn AssessmentStore>) -> Self {
        Self {
            engine,
            store,
            catalog_path: None,
            catalog_error: Arc::new(RwLock::new(None)),
        }
    }

    /// Builds engine and store from `config`. A catalog that fails to load
    /// does not stop startup; catalog-dependent endpoints answer 503 until
    /// a reload succeeds.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, StartupError> {
        let calibration = match &config.calibration_path {
            Some(p) => RiskCalibration::from_json_str(
                &std::fs::read_to_string(p)?,
                config.region.as_deref(),
            )?,
            None => match &config.region {
                Some(r) => RiskCalibration::shipped_region(r)?,
                None => RiskCalibration::shipped(),
            },
        };
        let (catalog, catalog_error) = match &config.catalog_path {
            None => (Catalog::shipped(), None),
            Some(p) => match Catalog::from_path(p) {
                Ok(c) => (c, None),
                Err(e) => {
                    tracing::error!(path = %p.display(), error = %e, "catalog failed to load");
                    (Catalog::shipped(), Some(e.to_string()))
                }
            },
        };
        let engine = Engine::new(Thresholds::default(), calibration, catalog)
            .with_explainer(Explainer::from_config(&config.explain)?);
        let store: Arc<dyn AssessmentStore> = match &config.store_path {
            Some(p) => Arc::new(JsonlStore::open(p)?),
            None => Arc::new(MemoryStore::new()),
        };
        Ok(Self {
            engine,
            store,
            catalog_path: config.catalog_path.clone(),
            catalog_error: Arc::new(RwLock::new(catalog_error)),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn store(&self) -> &Arc<dyn AssessmentStore> {
        &self.store
    }

    fn catalog_unavailable(&self) -> Option<ApiError> {
        self.catalog_error
            .read()
            .unwrap()
            .as_ref()
            .map(|e| ApiError {
                status: StatusCode::SERVICE_UNAVAILABLE,
                code: "catalog_unavailable",
                message: e.clone(),
                field: None,
            })
    }
}

/// Error body: `{"error": {"code", "message", "field"}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: None,
        }
    }
}

impl From<IntakeError> for ApiError {
    fn from(e: IntakeError) -> Self {
        let (status, code) = if e.is_constraint_violation() {
            (StatusCode::UNPROCESSABLE_ENTITY, "constraint_violation")
        } else {
            (StatusCode::BAD_REQUEST, "invalid_questionnaire")
        };
        Self {
            status,
            code,
            field: e.field_path(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body =
            json!({"error": {"code": self.code, "message": self.message, "field": self.field}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/assess", post(assess))
        .route("/recommend", post(recommend))
        .route("/assessments/{id}", get(stored))
        .route("/health", get(health))
        .route("/catalog/version", get(catalog_version))
        .route("/catalog/reload", post(catalog_reload))
        .with_state(state)
}

async fn assess(State(state): State<AppState>, body: String) -> ApiResult {
    let ind = parse_questionnaire_str(&body)?;
    Ok(Json(state.engine.assess(&ind)).into_response())
}

#[derive(Deserialize)]
struct RecommendQuery {
    explain: Option<String>,
}

/// Body of a `/recommend` answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub id: Uuid,
    pub recommendation: crate::recommend::Recommendation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<Value>,
}

async fn recommend(
    State(state): State<AppState>,
    Query(q): Query<RecommendQuery>,
    body: String,
) -> ApiResult {
    let mode: ExplainMode = match q.explain.as_deref() {
        None => ExplainMode::Fallback,
        Some(m) => m.parse().map_err(|e: String| ApiError {
            field: Some("explain".into()),
            ..ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e)
        })?,
    };
    let ind = parse_questionnaire_str(&body)?;
    if let Some(e) = state.catalog_unavailable() {
        return Err(e);
    }
    let outcome = state.engine.recommend(&ind, mode).await.map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "render_failed",
            e.to_string(),
        )
    })?;
    let rec = outcome.recommendation;
    let record = StoredAssessment {
        id: Uuid::new_v4(),
        stored_at: Utc::now(),
        engine_version: rec.engine_version.clone(),
        catalog_version: rec.catalog_version.clone(),
        calibration: state.engine.calibration().label(),
        indicators: ind,
        profile: rec.profile.clone(),
        recommendation: rec,
    };
    let stored = state.store.append(record).map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "store_failed",
            e.to_string(),
        )
    })?;
    let explanation = outcome
        .explanation
        .map(|e| json!({"source": e.source, "coverage": e.coverage, "error": e.error}));
    let body = RecommendResponse {
        id: stored.id,
        recommendation: stored.recommendation.clone(),
        explanation,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn stored(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let not_found = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no assessment {id}"),
        )
    };
    let uuid = Uuid::parse_str(&id).map_err(|_| not_found())?;
    let record = state.store.get(&uuid).ok_or_else(not_found)?;
    Ok(Json(&*record).into_response())
}

async fn health(State(state): State<AppState>) -> Response {
    let catalog = state.engine.catalog();
    let error = state.catalog_error.read().unwrap().clone();
    let body = json!({
        "status": if error.is_none() { "ok" } else { "degraded" },
        "engine_version": ENGINE_VERSION,
        "catalog": {
            "status": if error.is_none() { "loaded" } else { "failed" },
            "version": error.is_none().then(|| catalog.version().to_string()),
            "error": error,
        },
        "calibration": {"status": "loaded", "label": state.engine.calibration().label()},
        "explain": if state.engine.explainer().is_enabled() { "llm" } else { "fallback_only" },
        "stored": state.store.len(),
    });
    let status = if error.is_none() {
        StatusCode::OK
    } else {
        StatusCode::SERVICE_UNAVAILABLE
    };
    (status, Json(body)).into_response()
}

async fn catalog_version(State(state): State<AppState>) -> ApiResult {
    if let Some(e) = state.catalog_unavailable() {
        return Err(e);
    }
    let c = state.engine.catalog();
    Ok(
        Json(json!({"version": c.version(), "language": c.language(), "items": c.item_count()}))
            .into_response(),
    )
}

async fn catalog_reload(State(state): State<AppState>) -> ApiResult {
    let path = state.catalog_path.clone().ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "no_catalog_path",
            "service runs on the built-in catalog",
        )
    })?;
    let loaded = tokio::task::spawn_blocking(move || Catalog::from_path(&path))
        .await
        .map_err(|e| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "reload_failed",
                e.to_string(),
            )
        })?;
    match loaded {
        Ok(catalog) => {
            let version = catalog.version().to_string();
            let previous = state.engine.catalog_handle().replace(catalog);
            *state.catalog_error.write().unwrap() = None;
            tracing::info!(from = previous.version(), to = %version, "catalog reloaded");
            Ok(Json(json!({"version": version, "previous": previous.version()})).into_response())
        }
        Err(e) => {
            tracing::warn!(error = %e, "catalog reload rejected, keeping current catalog");
            Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_catalog",
                e.to_string(),
            ))
        }
    }
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), StartupError> {
    let state = AppState::from_config(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
