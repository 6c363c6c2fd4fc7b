use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use idealflow::graph::DirectedNetwork;
use idealflow::io::{load_document, parse_tntp_net, round_sig};
use idealflow::markov::Weighting;
use idealflow::solve::{FlowMethod, Normalization};
use idealflow::whatif::{Edit, MetricsSnapshot, Session, SessionOptions};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::ApiError;
use crate::state::{AppState, JournalRecord, SessionEntry};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn api_routes() -> Router<AppState> {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/edits", post(apply_edit))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/flow", get(flow))
}

#[derive(Serialize)]
pub struct Health {
    pub status: &'static str,
    pub version: &'static str,
}

pub async fn health() -> Json<Health> {
    Json(Health {
        status: "ok",
        version: VERSION,
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateQuery {
    #[serde(default)]
    augment: bool,
    weighting: Option<Weighting>,
    /// Pinned link as `tail-head`, 1-based.
    reference: Option<String>,
    /// `json` or `tntp`; sniffed from the body when absent.
    format: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Created {
    session_id: String,
    created_at: String,
    snapshot: MetricsSnapshot,
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn json_body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn parse_reference(s: &str) -> Result<(usize, usize), ApiError> {
    let bad = || ApiError::bad_request(format!("reference must look like 2-3, got {s:?}"));
    let (t, h) = s.split_once('-').ok_or_else(bad)?;
    Ok((
        t.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_network(body: &str, format: Option<&str>, headers: &HeaderMap) -> Result<DirectedNetwork, ApiError> {
    let declared_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let is_json = match format {
        Some("json") => true,
        Some("tntp") => false,
        Some(other) => return Err(ApiError::bad_request(format!("unknown format {other:?}"))),
        None => declared_json || body.trim_start().starts_with('{'),
    };
    if is_json {
        Ok(load_document(body)?.to_network()?)
    } else {
        Ok(parse_tntp_net(body)?.0)
    }
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

/// Runs `f` on the session off the async workers; calls on one session queue on its lock.
async fn with_session<T, F>(state: &AppState, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut SessionEntry) -> Result<T, ApiError> + Send + 'static,
{
    let entry = state.get(id).ok_or_else(|| ApiError::unknown_session(id))?;
    blocking(move || {
        let mut guard = entry.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        f(&mut guard)
    })
    .await
}

async fn create_session(
    State(state): State<AppState>,
    q: Result<Query<CreateQuery>, QueryRejection>,
    headers: HeaderMap,
    body: String,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let q = query(q)?;
    let net = parse_network(&body, q.format.as_deref(), &headers)?;
    let options = SessionOptions {
        augment: q.augment,
        weighting: q.weighting.unwrap_or_default(),
        reference_arc: q.reference.as_deref().map(parse_reference).transpose()?,
        ..SessionOptions::default()
    };
    let created_at = OffsetDateTime::now_utc()
        .format(&Rfc3339)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let (session, net) = blocking(move || Ok((Session::new(net.clone(), options)?, net))).await?;
    let snapshot = session.snapshot().clone();
    let session_id = state
        .insert(session, created_at.clone(), &net)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    tracing::info!(session = %session_id, nodes = net.node_count(), links = net.link_count(), "session created");
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id,
            created_at,
            snapshot,
        }),
    ))
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    with_session(&state, &id, |e| {
        Ok(Json(json!({
            "sessionId": e.id,
            "createdAt": e.created_at,
            "stage": e.session.stage(),
            "edits": e.session.edits().collect::<Vec<_>>(),
            "snapshot": e.session.snapshot(),
        })))
    })
    .await
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if state.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::unknown_session(&id))
    }
}

async fn apply_edit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Edit>, JsonRejection>,
) -> Result<Json<MetricsSnapshot>, ApiError> {
    let edit = json_body(body)?;
    with_session(&state, &id, move |e| {
        let snap = e.session.apply(edit.clone())?.clone();
        e.record(&JournalRecord::Edit { edit })
            .map_err(|err| ApiError::internal(err.to_string()))?;
        Ok(Json(snap))
    })
    .await
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<MetricsSnapshot>, ApiError> {
    with_session(&state, &id, |e| {
        let snap = e.session.undo()?.clone();
        e.record(&JournalRecord::Undo)
            .map_err(|err| ApiError::internal(err.to_string()))?;
        Ok(Json(snap))
    })
    .await
}

async fn history(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    with_session(&state, &id, |e| {
        Ok(Json(json!({ "snapshots": e.session.snapshots().collect::<Vec<_>>() })))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NormalizeParam {
    Min,
    Total,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowQuery {
    normalize: Option<NormalizeParam>,
    /// Sum of link flows under `normalize=total`, default 1.
    total: Option<f64>,
    method: Option<FlowMethod>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FlowResponse {
    method: FlowMethod,
    normalization: Normalization,
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    snapshot: MetricsSnapshot,
}

async fn flow(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<FlowQuery>, QueryRejection>,
) -> Result<Json<FlowResponse>, ApiError> {
    let q = query(q)?;
    let normalization = match q.normalize {
        None | Some(NormalizeParam::Min) => Normalization::Min,
        Some(NormalizeParam::Total) => Normalization::Total(q.total.unwrap_or(1.0)),
    };
    let method = q.method.unwrap_or_default();
    with_session(&state, &id, move |e| {
        let f = e.session.flow(normalization, method)?;
        let net = e.session.solved_network()?;
        let matrix = f
            .matrix()
            .to_dense()
            .into_iter()
            .map(|row| row.into_iter().map(round_sig).collect())
            .collect();
        Ok(Json(FlowResponse {
            method,
            normalization,
            labels: (0..net.node_count()).map(|i| net.label(i)).collect(),
            matrix,
            snapshot: e.session.snapshot().clone(),
        }))
    })
    .await
}
