use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use growclusters::Error as CoreError;
use serde_json::{json, Value};

/// Uniform `{code, message, details}` error envelope.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("unknown {what} '{id}'"),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_params", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::Data(_) | CoreError::Schema(_) => {
                Self::new(StatusCode::BAD_REQUEST, "data_error", e.to_string())
            }
            CoreError::Usage(_) => Self::invalid(e.to_string()),
            CoreError::DisconnectedGraph { sizes } => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "disconnected_graph",
                e.to_string(),
            )
            .with_details(json!({ "component_sizes": sizes })),
            CoreError::Integrity { .. } => {
                Self::new(StatusCode::CONFLICT, "integrity_error", e.to_string())
            }
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "code": self.code,
            "message": self.message,
            "details": self.details,
        });
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
