use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use idealflow::Error;
use serde::Serialize;
use serde_json::{json, Value};

/// Error body: `{code, message, detail}`.
#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
            .with_detail(json!({ "sessionId": id }))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

fn classify(e: &Error) -> (StatusCode, &'static str, Value) {
    use StatusCode as S;
    match e {
        Error::Parse { line, .. } => (S::BAD_REQUEST, "parse_error", json!({ "line": line })),
        Error::Schema { path, .. } => (S::BAD_REQUEST, "schema_error", json!({ "path": path })),
        Error::MetadataMismatch { .. } => (S::BAD_REQUEST, "parse_error", Value::Null),
        Error::InvalidConfig(_) => (S::BAD_REQUEST, "invalid_request", Value::Null),
        Error::NodeOutOfRange { index, n } => (S::BAD_REQUEST, "node_out_of_range", json!({ "index": index, "n": n })),
        Error::InvalidCapacity { .. } => (S::BAD_REQUEST, "invalid_capacity", Value::Null),
        Error::DuplicateArc { tail, head } => (S::CONFLICT, "duplicate_arc", json!({ "tail": tail, "head": head })),
        Error::MissingArc { tail, head } => (S::CONFLICT, "missing_arc", json!({ "tail": tail, "head": head })),
        Error::EmptyHistory => (S::CONFLICT, "empty_history", Value::Null),
        Error::NotStronglyConnected => (S::UNPROCESSABLE_ENTITY, "not_strongly_connected", Value::Null),
        Error::AugmentationFailed => (S::UNPROCESSABLE_ENTITY, "augmentation_failed", Value::Null),
        Error::SelfLoop(node) => (S::UNPROCESSABLE_ENTITY, "self_loop", json!({ "node": node + 1 })),
        Error::DanglingNode(node) => (S::UNPROCESSABLE_ENTITY, "dangling_node", json!({ "node": node + 1 })),
        e if e.is_numeric() => (S::INTERNAL_SERVER_ERROR, "numerical_failure", Value::Null),
        _ => (S::UNPROCESSABLE_ENTITY, "invalid_network", Value::Null),
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code, detail) = classify(&e);
        ApiError {
            status,
            code,
            message: e.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}
