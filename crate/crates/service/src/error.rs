use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use offcut_core::io::{DocumentError, RunError};
use offcut_core::optimizer::OptimizeError;
use serde::{Deserialize, Serialize};

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    /// JSON path of the offending field, for schema violations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Endpoint-specific details, such as violated constraint rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error: message.into(), path: None, details: None } }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.body.details = Some(serde_json::to_value(details).expect("details serialize"));
        self
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        let mut err = ApiError::unprocessable(e.to_string());
        err.body.path = (!e.path.is_empty()).then_some(e.path);
        err
    }
}

impl From<OptimizeError> for ApiError {
    fn from(e: OptimizeError) -> Self {
        ApiError::unprocessable(e.to_string())
    }
}

impl From<RunError> for ApiError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Document(d) => d.into(),
            other => ApiError::unprocessable(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
