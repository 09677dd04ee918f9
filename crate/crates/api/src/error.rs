use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use diethelper_core::{CaptureError, CatalogError, CheckError, ProfileError};

/// Error body returned by every endpoint: a stable machine code, an English
/// message, and `retake: true` when the client should capture the label again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    retake: bool,
}

pub const NO_TEXT_FOUND: &str = "no_text_found";
pub const EMPTY_TRANSCRIPT: &str = "empty_transcript";

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn retake(&self) -> bool {
        self.code == NO_TEXT_FOUND || self.code == EMPTY_TRANSCRIPT
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
            retake: self.retake(),
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<ProfileError> for ApiError {
    fn from(err: ProfileError) -> Self {
        use ProfileError::*;
        let (status, code) = match &err {
            EmailTaken => (StatusCode::CONFLICT, "email_taken"),
            InvalidEmail => (StatusCode::BAD_REQUEST, "invalid_email"),
            WeakPassword => (StatusCode::BAD_REQUEST, "weak_password"),
            EmptyName => (StatusCode::BAD_REQUEST, "empty_name"),
            InvalidCredentials => (StatusCode::UNAUTHORIZED, "invalid_credentials"),
            Unauthenticated => (StatusCode::UNAUTHORIZED, "unauthenticated"),
            SessionExpired => (StatusCode::UNAUTHORIZED, "session_expired"),
            Unauthorized => (StatusCode::FORBIDDEN, "forbidden"),
            UserNotFound(_) => (StatusCode::NOT_FOUND, "user_not_found"),
            DietNotFound(_) => (StatusCode::NOT_FOUND, "diet_not_found"),
            AlreadyChosen(_) => (StatusCode::CONFLICT, "already_chosen"),
            NotChosen(_) => (StatusCode::NOT_FOUND, "not_chosen"),
            EmptyIngredient => (StatusCode::BAD_REQUEST, "empty_ingredient"),
            IngredientContainsComma => (StatusCode::BAD_REQUEST, "invalid_ingredient"),
            DuplicateIngredient(_) => (StatusCode::CONFLICT, "duplicate_ingredient"),
            NotPresent(_) => (StatusCode::NOT_FOUND, "ingredient_not_present"),
            Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage_error"),
        };
        Self::new(status, code, err.to_string())
    }
}

impl From<CatalogError> for ApiError {
    fn from(err: CatalogError) -> Self {
        use CatalogError::*;
        let (status, code) = match &err {
            DietNotFound(_) => (StatusCode::NOT_FOUND, "diet_not_found"),
            Unauthorized => (StatusCode::FORBIDDEN, "forbidden"),
            Validation(_) => (StatusCode::BAD_REQUEST, "invalid_diet"),
            SeedRead { .. } | SeedParse(_) | SeedValidation(_) => (StatusCode::INTERNAL_SERVER_ERROR, "seed_error"),
            Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage_error"),
        };
        Self::new(status, code, err.to_string())
    }
}

impl From<CaptureError> for ApiError {
    fn from(err: CaptureError) -> Self {
        let (status, code) = match &err {
            CaptureError::NoTextFound => (StatusCode::UNPROCESSABLE_ENTITY, NO_TEXT_FOUND),
            CaptureError::AdapterUnavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "ocr_unavailable"),
            CaptureError::ImageRead { .. } => (StatusCode::BAD_REQUEST, "image_unreadable"),
        };
        Self::new(status, code, err.to_string())
    }
}

impl From<CheckError> for ApiError {
    fn from(err: CheckError) -> Self {
        match err {
            CheckError::Capture(e) => e.into(),
            CheckError::EmptyTranscript => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, EMPTY_TRANSCRIPT, err.to_string())
            }
        }
    }
}
