use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use gudie::{ExpansionError, PipelineError};
use serde_json::json;

/// An error response: status plus a JSON body `{error, kind, partial?}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: "bad_request",
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            kind: "not_found",
            message: message.into(),
        }
    }

    pub fn internal(err: impl std::fmt::Display) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "internal",
            message: err.to_string(),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(err: PipelineError) -> Self {
        match &err {
            PipelineError::Expansion(ExpansionError::BudgetExceeded { .. }) => ApiError {
                status: StatusCode::CONFLICT,
                kind: "budget_exceeded",
                message: err.to_string(),
            },
            PipelineError::ThreadPool(_) => ApiError::internal(err),
            _ => ApiError {
                status: StatusCode::BAD_REQUEST,
                kind: err.stage(),
                message: err.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message, "kind": self.kind });
        if self.status == StatusCode::CONFLICT {
            body["partial"] = json!(false);
        }
        (self.status, Json(body)).into_response()
    }
}
