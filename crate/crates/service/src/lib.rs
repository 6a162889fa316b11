//! HTTP/JSON service over precomputed channel scores.
//!
//! Channel scores are computed once when data is loaded. Each request only
//! fuses them and applies the threshold, so responses are a pure function of
//! the loaded snapshot and the query.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/grants` | `[GrantSummary]` |
//! | GET | `/grants/{id}/recommendations?alpha=F&threshold=F` | `RecommendationList` |
//! | GET | `/researchers/{id}` | `ResearcherProfile` |
//! | POST | `/reload` | `ReloadSummary` |
//!
//! Errors are `{"error": "...", "field": "..."}` with a 4xx/5xx status.

pub mod config;

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use thiserror::Error;

use grantmatch_core::api::{ErrorBody, GrantSummary, ReloadSummary, ResearcherProfile};
use grantmatch_core::pipeline::{Analysis, Dataset, PipelineError};
use grantmatch_core::recommend::{RecommendError, RecommendationList, WeightParams};
use grantmatch_core::taxonomy::KeywordTable;
use grantmatch_core::tokenize::TokenizerProfile;

pub use config::ServiceConfig;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Builds the analysis described by `config`.
///
/// `analysis` wins over `corpus`. A corpus may be a layout directory or a
/// dataset JSON written by `grantmatch ingest`. With neither set the service
/// starts empty.
pub fn load_analysis(config: &ServiceConfig) -> Result<Analysis, ServiceError> {
    if let Some(path) = &config.analysis {
        return Ok(Analysis::read(path)?);
    }
    let Some(corpus) = &config.corpus else {
        return Ok(Analysis {
            mining: config.mining,
            rule_source: config.rule_source,
            grants: Vec::new(),
            researchers: Vec::new(),
        });
    };
    let table_path = match &config.table {
        Some(p) => p.clone(),
        None if corpus.is_dir() => corpus.join("keywords.tsv"),
        None => return Err(ServiceError::Config("`table` is required with a dataset file".into())),
    };
    let table = KeywordTable::load(&table_path).map_err(PipelineError::from)?;
    let dataset = if corpus.is_dir() {
        Dataset::load(corpus, &TokenizerProfile::default(), Some(&table))?
    } else {
        Dataset::read(corpus)?
    };
    Ok(Analysis::compute(&dataset, &table, &config.mining, config.rule_source)?)
}

/// Shared state. Handlers clone the current `Arc` and never hold the lock
/// while working, so a reload swaps the snapshot without affecting requests
/// already in flight.
pub struct AppState {
    snapshot: RwLock<Arc<Analysis>>,
    source: Option<ServiceConfig>,
    default_threshold: f64,
}

impl AppState {
    /// Serves a fixed analysis. `POST /reload` is refused.
    pub fn from_analysis(analysis: Analysis, default_threshold: f64) -> Self {
        Self {
            snapshot: RwLock::new(Arc::new(analysis)),
            source: None,
            default_threshold,
        }
    }

    pub fn from_config(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let analysis = load_analysis(&config)?;
        Ok(Self {
            snapshot: RwLock::new(Arc::new(analysis)),
            default_threshold: config.default_threshold,
            source: Some(config),
        })
    }

    pub fn snapshot(&self) -> Arc<Analysis> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn replace(&self, analysis: Analysis) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(analysis);
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>, field: Option<&str>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.into(),
                field: field.map(str::to_owned),
            },
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"), None)
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        let field = match &e {
            RecommendError::OutOfRange { field, .. } => Some(*field),
            RecommendError::InvalidWeights { .. } => Some("alpha"),
            RecommendError::UnsupportedFormat(_) => None,
        };
        Self::new(StatusCode::BAD_REQUEST, e.to_string(), field)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/grants", get(list_grants))
        .route("/grants/{id}/recommendations", get(recommendations))
        .route("/researchers/{id}", get(researcher))
        .route("/reload", post(reload))
        .with_state(state)
}

async fn list_grants(State(state): State<Arc<AppState>>) -> Json<Vec<GrantSummary>> {
    Json(state.snapshot().grants.iter().map(GrantSummary::from).collect())
}

fn unit_param(query: &HashMap<String, String>, field: &'static str, default: f64) -> Result<f64, ApiError> {
    match query.get(field) {
        None => Ok(default),
        Some(raw) => raw.trim().parse::<f64>().map_err(|_| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("`{field}` is not a number: {raw}"),
                Some(field),
            )
        }),
    }
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    UrlPath(grant_id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Json<RecommendationList>, ApiError> {
    let alpha = unit_param(&query, "alpha", WeightParams::default().alpha)?;
    let threshold = unit_param(&query, "threshold", state.default_threshold)?;
    let params = WeightParams::from_alpha(alpha)?;
    let snapshot = state.snapshot();
    match snapshot.recommend(&grant_id, &params, threshold) {
        Ok(list) => Ok(Json(list)),
        Err(PipelineError::UnknownGrant(id)) => Err(ApiError::not_found("grant", &id)),
        Err(PipelineError::Recommend(e)) => Err(e.into()),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None)),
    }
}

async fn researcher(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ResearcherProfile>, ApiError> {
    let snapshot = state.snapshot();
    let r = snapshot
        .researcher(&id)
        .ok_or_else(|| ApiError::not_found("researcher", &id))?;
    Ok(Json(ResearcherProfile::from_analysis(&snapshot, r)))
}

async fn reload(State(state): State<Arc<AppState>>) -> Result<Json<ReloadSummary>, ApiError> {
    let Some(config) = state.source.clone() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "no data source configured; the loaded analysis is fixed",
            None,
        ));
    };
    let loaded = tokio::task::spawn_blocking(move || load_analysis(&config))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None))?;
    let analysis = loaded.map_err(|e| {
        tracing::warn!(error = %e, "reload failed; keeping the current snapshot");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None)
    })?;
    let summary = ReloadSummary {
        grants: analysis.grants.len(),
        researchers: analysis.researchers.len(),
    };
    state.replace(analysis);
    tracing::info!(grants = summary.grants, researchers = summary.researchers, "reloaded");
    Ok(Json(summary))
}

/// Reads the config file named by `GRANTMATCH_CONFIG` (or `path`) and
/// applies environment overrides.
pub fn config_from_env(path: Option<&Path>) -> Result<ServiceConfig, ServiceError> {
    let file = path
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("GRANTMATCH_CONFIG").map(Into::into));
    let config = match file {
        Some(p) => ServiceConfig::load(&p)?,
        None => ServiceConfig::default(),
    };
    config.with_overrides(|k| std::env::var(k).ok())
}
