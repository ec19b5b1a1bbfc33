//! HTTP routes. Bodies are JSON; errors are `{"error": {"code", "message"}}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::sessions::{ApiError, Registry};

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub token: Option<String>,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::InvalidScenario(_) | ApiError::InvalidConfig(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::EpisodeDone | ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::AuthFailed => StatusCode::UNAUTHORIZED,
            ApiError::MalformedRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::TooManySessions(_) => StatusCode::TOO_MANY_REQUESTS,
            ApiError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code(), "message": self.to_string()}});
        (self.status(), Json(body)).into_response()
    }
}

fn parse_body(bytes: &Bytes) -> Result<Value, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(json!({}));
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::MalformedRequest(format!("body is not JSON: {e}")))
}

/// Runs registry work off the async workers: steps fsync and may call a
/// remote simulator.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| Err(ApiError::Storage(format!("worker panicked: {e}"))))
}

async fn healthz(State(st): State<AppState>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "active_sessions": st.registry.active(),
        "scenarios": st.registry.scenario_count(),
    }))
}

async fn create(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body = parse_body(&body)?;
    let reg = st.registry.clone();
    let created = blocking(move || reg.create(body)).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn step(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let body = parse_body(&body)?;
    let reg = st.registry.clone();
    let outcome = blocking(move || reg.step(&id, body)).await?;
    Ok(Json(outcome).into_response())
}

async fn fetch(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let reg = st.registry.clone();
    Ok(Json(blocking(move || reg.get(&id)).await?).into_response())
}

async fn close(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let reg = st.registry.clone();
    Ok(Json(blocking(move || reg.close(&id)).await?).into_response())
}

async fn auth(State(st): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::AuthFailed.into_response();
        }
    }
    next.run(req).await
}

async fn fallback() -> ApiError {
    ApiError::NotFound("no such route".into())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/sessions", post(create))
        .route("/v1/sessions/{id}/step", post(step))
        .route("/v1/sessions/{id}", get(fetch).delete(close))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), auth))
        .with_state(state)
}
