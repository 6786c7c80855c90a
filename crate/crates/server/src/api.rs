//! `/api/v1` routes.

use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use iisa::resample::{KernelKind, ResampleSpec};
use iisa::study::{now_ms, NextStep, OpinionSubmission, Study, StudyError};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::render::{RenderError, Renderer};

/// Shared service state. The study is the single serialized writer; every
/// mutation runs under its lock on the blocking pool.
#[derive(Clone)]
pub struct AppState {
    pub study: Arc<Mutex<Study>>,
    pub renderer: Arc<Renderer>,
    pub admin_token: Option<String>,
    /// Clock in milliseconds; replaceable for tests.
    pub clock: Arc<dyn Fn() -> u64 + Send + Sync>,
}

impl AppState {
    pub fn new(study: Study, renderer: Renderer, admin_token: Option<String>) -> Self {
        Self {
            study: Arc::new(Mutex::new(study)),
            renderer: Arc::new(renderer),
            admin_token,
            clock: Arc::new(now_ms),
        }
    }

    async fn with_study<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Study, u64) -> Result<T, ApiError> + Send + 'static,
    {
        let study = self.study.clone();
        let now = (self.clock)();
        tokio::task::spawn_blocking(move || {
            let mut guard = study.lock().map_err(|_| ApiError::internal("study lock poisoned"))?;
            f(&mut guard, now)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        use StudyError::*;
        let (status, kind) = match &e {
            Duplicate { .. } => (StatusCode::CONFLICT, "duplicate"),
            IncompleteRepetitions { .. } => (StatusCode::CONFLICT, "incomplete"),
            NotQualified(_) => (StatusCode::FORBIDDEN, "not_qualified"),
            NotInTraining(_) => (StatusCode::CONFLICT, "not_in_training"),
            OutOfOrder(_) | ImageNotInAssignment { .. } => (StatusCode::BAD_REQUEST, "out_of_order"),
            SliderPosition { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "slider_position"),
            UnknownParticipant(_) | UnknownTrainingItem(_) | UnknownBatch(_) | UnknownStudy(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            Config(_) => (StatusCode::BAD_REQUEST, "invalid"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, kind, e.to_string())
    }
}

impl From<RenderError> for ApiError {
    fn from(e: RenderError) -> Self {
        let (status, kind) = match &e {
            RenderError::BelowLowerBound(_) | RenderError::AboveOne(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "scale_out_of_range")
            }
            RenderError::UnknownImage(_) => (StatusCode::NOT_FOUND, "not_found"),
            RenderError::Failed(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, kind, e.to_string())
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

/// Participant id carried by the bearer token.
fn participant(headers: &HeaderMap) -> Result<String, ApiError> {
    let token = bearer(headers)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing bearer token"))?;
    let ok = token.len() <= 128
        && token.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if !ok {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "malformed participant token"));
    }
    Ok(token.to_string())
}

fn require_admin(state: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    match &state.admin_token {
        Some(expected) if bearer(headers) != Some(expected.as_str()) => {
            Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "admin token required"))
        }
        _ => Ok(()),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/batch/next", get(next_batch))
        .route("/api/v1/image/{id}/render", get(render))
        .route("/api/v1/opinion", post(opinion))
        .route("/api/v1/training/opinion", post(training_opinion))
        .route("/api/v1/progress", get(progress))
        .route("/api/v1/slider-grid", get(slider_grid))
        .route("/api/v1/admin/gates", get(gates))
        .route("/api/v1/admin/export", get(export))
        .with_state(state)
}

#[derive(Serialize)]
struct TrainingPrompt {
    item_id: String,
    image_id: String,
}

async fn next_batch(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    let pid = participant(&headers)?;
    let step = state
        .with_study(move |study, now| {
            study.register_participant(&pid, now)?;
            Ok(study.next_assignment(&pid, now)?)
        })
        .await?;
    // Accepted ranges and hints stay server-side.
    Ok(match step {
        NextStep::Training { items } => Json(json!({
            "status": "training",
            "items": items
                .into_iter()
                .map(|i| TrainingPrompt { item_id: i.item_id, image_id: i.image_id })
                .collect::<Vec<_>>(),
        }))
        .into_response(),
        other => Json(other).into_response(),
    })
}

#[derive(Deserialize)]
struct RenderQuery {
    scale: f64,
    #[serde(default)]
    kernel: Option<String>,
}

async fn render(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RenderQuery>,
) -> Result<Response, ApiError> {
    let spec = match q.kernel.as_deref() {
        None => ResampleSpec::default(),
        Some(k) => {
            let kind: KernelKind = k
                .parse()
                .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "invalid", e))?;
            ResampleSpec::with_kernel(kind)
        }
    };
    let bytes = state.renderer.render(&id, q.scale, spec).await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes.as_ref().clone()).into_response())
}

#[derive(Deserialize)]
struct OpinionBody {
    batch_id: u32,
    repetition: u8,
    image_id: String,
    slider_position: u32,
    #[serde(default)]
    duration_ms: u64,
    #[serde(default)]
    request_token: Option<String>,
}

async fn opinion(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(body): Json<OpinionBody>,
) -> Result<Response, ApiError> {
    let pid = participant(&headers)?;
    let (opinion, gate) = state
        .with_study(move |study, now| {
            let sub = OpinionSubmission {
                participant_id: pid.clone(),
                batch_id: body.batch_id,
                repetition: body.repetition,
                image_id: body.image_id,
                slider_position: body.slider_position,
                duration_ms: body.duration_ms,
                request_token: body.request_token,
            };
            let op = study.submit_opinion(sub, now)?;
            let gate = study
                .state()
                .gate(&pid, op.batch_id, op.generation)
                .filter(|_| op.repetition == 2)
                .cloned();
            Ok((op, gate))
        })
        .await?;
    Ok(Json(json!({"opinion": opinion, "gate": gate})).into_response())
}

#[derive(Deserialize)]
struct TrainingBody {
    item_id: String,
    slider_position: u32,
    #[serde(default)]
    request_token: Option<String>,
}

async fn training_opinion(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(body): Json<TrainingBody>,
) -> Result<Response, ApiError> {
    let pid = participant(&headers)?;
    let outcome = state
        .with_study(move |study, now| {
            study.register_participant(&pid, now)?;
            let scale = study.config().slider().scale(body.slider_position)?;
            Ok(study.submit_training_opinion(&pid, &body.item_id, scale, body.request_token, now)?)
        })
        .await?;
    Ok(Json(outcome).into_response())
}

async fn progress(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    let pid = bearer(&headers).map(str::to_string);
    let body = state
        .with_study(move |study, _| {
            let st = study.state();
            let mine = pid.and_then(|p| st.participant_progress(&p).ok());
            Ok(json!({"study": st.progress(), "participant": mine}))
        })
        .await?;
    Ok(Json(body).into_response())
}

async fn slider_grid(State(state): State<AppState>) -> Json<serde_json::Value> {
    let grid = state.renderer.grid();
    Json(json!({"steps": grid.steps, "s_lb": grid.s_lb, "scales": grid.scales()}))
}

async fn gates(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    require_admin(&state, &headers)?;
    let gates = state.with_study(|study, _| Ok(study.state().gates.clone())).await?;
    Ok(Json(gates).into_response())
}

async fn export(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    require_admin(&state, &headers)?;
    let bundle = state.with_study(|study, _| Ok(study.state().export()?)).await?;
    Ok(Json(bundle).into_response())
}
