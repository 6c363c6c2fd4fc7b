//! HTTP what-if sessions over ideal flow.
//!
//! Every endpoint lives under `/api/v1`; `/health` is also served at the
//! root. A session holds one network and its edit history. Edits on one
//! session run one at a time; distinct sessions proceed independently. All
//! solving happens on the blocking pool, so health checks answer while a
//! large network is being solved.
//!
//! | method | path | result |
//! |---|---|---|
//! | `GET` | `/api/v1/health` | `{status, version}` |
//! | `POST` | `/api/v1/sessions?augment&weighting&reference&format` | `201 {sessionId, createdAt, snapshot}` |
//! | `GET` | `/api/v1/sessions/{id}` | id, edits and current snapshot |
//! | `DELETE` | `/api/v1/sessions/{id}` | `204` |
//! | `POST` | `/api/v1/sessions/{id}/edits` | snapshot after the edit |
//! | `POST` | `/api/v1/sessions/{id}/undo` | snapshot of the previous stage |
//! | `GET` | `/api/v1/sessions/{id}/history` | every snapshot so far |
//! | `GET` | `/api/v1/sessions/{id}/flow?normalize&total&method` | flow matrix and snapshot |
//!
//! Errors carry `{code, message, detail}` with status 400 for malformed
//! input, 404 for unknown sessions, 409 for duplicate or missing links and
//! undo on an empty history, and 422 for networks without a valid flow.

mod error;
mod routes;
mod state;

use std::future::Future;

use axum::http::{HeaderValue, Method};
use axum::routing::get;
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::trace::TraceLayer;

pub use error::ApiError;
pub use routes::{health, Health, VERSION};
pub use state::{AppState, JournalError, JournalRecord};

/// Origins allowed by CORS; `*` allows any. Empty disables CORS headers.
#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    pub cors_origins: Vec<String>,
}

fn cors(origins: &[String]) -> Result<CorsLayer, axum::http::header::InvalidHeaderValue> {
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(
            origins
                .iter()
                .map(|o| HeaderValue::from_str(o))
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers([axum::http::header::CONTENT_TYPE]))
}

/// The full application.
pub fn router(state: AppState, config: &ServiceConfig) -> Result<Router, axum::http::header::InvalidHeaderValue> {
    let mut app = Router::new()
        .route("/health", get(health))
        .nest("/api/v1", routes::api_routes())
        .with_state(state)
        .layer(TraceLayer::new_for_http());
    if !config.cors_origins.is_empty() {
        app = app.layer(cors(&config.cors_origins)?);
    }
    Ok(app)
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
