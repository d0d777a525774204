use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use glyphctl::fontio::FontError;
use glyphctl::pipeline::PipelineError;

/// Error body: `{"code", "message", "detail"}`.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), detail: Value::Null }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn busy() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "busy", "job queue is full, retry later")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<FontError> for ApiError {
    fn from(e: FontError) -> Self {
        let code = match e {
            FontError::UnsupportedFeature(_) => "unsupported_font",
            _ => "malformed_font",
        };
        let detail = serde_json::json!({ "table": e.table() });
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string()).with_detail(detail)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            _ if e.is_backend() => StatusCode::BAD_GATEWAY,
            PipelineError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => StatusCode::NOT_FOUND,
            PipelineError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let detail = match &e {
            PipelineError::Backend(glyphctl::backend::BackendError::Unavailable { endpoint, attempts, .. }) => {
                serde_json::json!({ "endpoint": endpoint, "attempts": attempts })
            }
            PipelineError::MisalignedOutputs { id, path } => serde_json::json!({ "id": id, "path": path }),
            PipelineError::Manifest { path, line, .. } => serde_json::json!({ "path": path, "line": line }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}
