//! HTTP service that hands out annotation tasks and records ratings.
//!
//! Routes:
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/sessions/{id}/next` | next group of up to three videos of one prompt |
//! | POST | `/sessions/{id}/ratings` | both scores and the subtask votes for one video |
//! | GET | `/sessions/{id}/progress` | completed and total counts |
//! | POST | `/studies` | create a study and its sessions (admin token) |
//! | GET | `/studies/{id}/export` | ratings file, or `?format=json` for the whole study |
//!
//! Payloads are documented in `API.md` next to this crate's manifest.

pub mod api;
pub mod error;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mosbench_core::error::StoreError;
use serde::de::DeserializeOwned;

use crate::api::{ExportFormat, ExportQuery};
pub use crate::error::ApiError;
pub use crate::state::Registry;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub store_dir: PathBuf,
    /// Required as `Authorization: Bearer <token>` on `POST /studies`.
    /// `None` leaves study creation open.
    pub admin_token: Option<String>,
}

/// Shared handle. All reads and writes go through one lock, which doubles
/// as the store's write queue.
#[derive(Debug, Clone)]
pub struct AppState {
    registry: Arc<Mutex<Registry>>,
    admin_token: Option<Arc<str>>,
}

impl AppState {
    pub fn open(config: &ServerConfig) -> Result<AppState, StoreError> {
        Ok(AppState {
            registry: Arc::new(Mutex::new(Registry::open(&config.store_dir)?)),
            admin_token: config.admin_token.as_deref().map(Arc::from),
        })
    }

    /// Runs `f` on the registry off the async workers, since it may touch disk.
    async fn with<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Registry) -> Result<T, ApiError> + Send + 'static,
    {
        let registry = Arc::clone(&self.registry);
        tokio::task::spawn_blocking(move || {
            let mut guard = registry.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
            f(&mut guard)
        })
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
    }

    fn authorize(&self, headers: &HeaderMap) -> Result<(), ApiError> {
        let Some(token) = &self.admin_token else {
            return Ok(());
        };
        let given = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        match given {
            Some(g) if g.as_bytes() == token.as_bytes() => Ok(()),
            _ => Err(ApiError::Unauthorized),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions/{id}/next", get(next_task))
        .route("/sessions/{id}/ratings", post(submit_rating))
        .route("/sessions/{id}/progress", get(progress))
        .route("/studies", post(create_study))
        .route("/studies/{id}/export", get(export))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "annotation server listening");
    axum::serve(listener, router(state)).await
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

async fn next_task(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let task = state.with(move |r| r.next_task(&id)).await?;
    Ok(Json(task).into_response())
}

async fn submit_rating(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let submission = parse_body(&body)?;
    let ack = state.with(move |r| r.submit(&id, submission)).await?;
    Ok(Json(ack).into_response())
}

async fn progress(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let p = state.with(move |r| r.progress(&id)).await?;
    Ok(Json(p).into_response())
}

async fn create_study(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    state.authorize(&headers)?;
    let req = parse_body(&body)?;
    let created = state.with(move |r| r.create_study(req)).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<ExportQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(query) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let format = query.format;
    let bytes = state.with(move |r| r.export(&id, format)).await?;
    let content_type = match format {
        ExportFormat::Csv => "text/csv; charset=utf-8",
        ExportFormat::Json => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}
