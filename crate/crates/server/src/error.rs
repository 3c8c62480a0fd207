use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use mosbench_core::error::{AssignError, StoreError};
use serde::Serialize;
use thiserror::Error;

/// Request failures, each mapped to one status code and a stable `error` code.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown study {0}")]
    UnknownStudy(String),
    #[error("video {video} is not assigned to session {session}")]
    UnknownVideo { session: String, video: String },
    #[error("video {0} was already rated in this session")]
    Duplicate(String),
    #[error("study {0} already exists")]
    StudyExists(String),
    #[error("{field} = {value} is outside 1..=5")]
    OutOfRange { field: &'static str, value: i64 },
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("expected {expected} vote(s), got {got}")]
    VoteCount { expected: usize, got: usize },
    #[error("invalid study: {0}")]
    InvalidStudy(String),
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("a valid admin token is required")]
    Unauthorized,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("worker failed: {0}")]
    Internal(String),
}

impl From<AssignError> for ApiError {
    fn from(e: AssignError) -> Self {
        ApiError::InvalidStudy(e.to_string())
    }
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownStudy(_) | ApiError::UnknownVideo { .. } => {
                StatusCode::NOT_FOUND
            }
            ApiError::Duplicate(_) | ApiError::StudyExists(_) => StatusCode::CONFLICT,
            ApiError::OutOfRange { .. }
            | ApiError::MissingField(_)
            | ApiError::VoteCount { .. }
            | ApiError::InvalidStudy(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::Store(_) | ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::UnknownStudy(_) => "unknown_study",
            ApiError::UnknownVideo { .. } => "unknown_video",
            ApiError::Duplicate(_) => "duplicate",
            ApiError::StudyExists(_) => "study_exists",
            ApiError::OutOfRange { .. } => "out_of_range",
            ApiError::MissingField(_) => "missing_field",
            ApiError::VoteCount { .. } => "vote_count",
            ApiError::InvalidStudy(_) => "invalid_study",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Unauthorized => "unauthorized",
            ApiError::Store(_) => "store",
            ApiError::Internal(_) => "internal",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = ErrorBody {
            error: self.code(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}
