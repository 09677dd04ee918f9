use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Path, Request, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};

use diethelper_core::{
    check_label_with, extract_fragments, CaptureRequest, Diet, DietSummary, FilterResult, LabelInput, Session,
    TextFragment, UserProfile,
};

use crate::error::ApiError;
use crate::state::AppState;

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

/// Upper bound on request bodies; label photos are the largest payload.
pub const MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/register", post(register))
        .route("/v1/login", post(login))
        .route("/v1/logout", post(logout))
        .route("/v1/me", get(me).patch(update_me))
        .route("/v1/me/diets/{name}", put(choose_diet).delete(remove_diet))
        .route("/v1/me/ingredients", post(add_ingredient))
        .route("/v1/me/ingredients/{ingredient}", delete(remove_ingredient))
        .route("/v1/diets", get(list_diets))
        .route("/v1/diets/{name}", get(get_diet))
        .route("/v1/check", post(check))
        .route("/v1/check/image", post(check_image))
        .route("/v1/users/{uid}", get(get_user))
        .route("/v1/admin/users", get(admin_list_users))
        .route("/v1/admin/users/{uid}", delete(admin_delete_user))
        .route("/v1/admin/diets/{name}", put(admin_put_diet).delete(admin_delete_diet))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let started = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        %method,
        path,
        status = response.status().as_u16(),
        elapsed_ms = started.elapsed().as_secs_f64() * 1000.0,
        "request"
    );
    response
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// JSON body extractor whose rejections use the common error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = axum::extract::rejection::JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(ApiJson(value)),
            Err(rejection) => Err(ApiError::new(rejection.status(), "bad_request", rejection.body_text())),
        }
    }
}

/// The session behind the request's bearer token.
pub struct Caller {
    pub session: Session,
}

impl FromRequestParts<Shared> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ApiError::from(diethelper_core::ProfileError::Unauthenticated))?;
        let session = state.users.validate(token)?;
        Ok(Caller { session })
    }
}

/// Runs blocking work (password hashing, OCR processes) off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    diets: usize,
    catalog_version: u64,
}

async fn healthz(State(state): State<Shared>) -> Json<Health> {
    let catalog = state.catalog();
    Json(Health {
        status: "ok",
        diets: catalog.len(),
        catalog_version: catalog.version(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterBody {
    pub name: String,
    pub email: String,
    pub password: String,
}

async fn register(
    State(state): State<Shared>,
    ApiJson(body): ApiJson<RegisterBody>,
) -> ApiResult<(StatusCode, Json<UserProfile>)> {
    let profile = blocking(move || Ok(state.users.register(&body.name, &body.email, &body.password)?)).await?;
    Ok((StatusCode::CREATED, Json(profile)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoginBody {
    pub email: String,
    pub password: String,
}

async fn login(State(state): State<Shared>, ApiJson(body): ApiJson<LoginBody>) -> ApiResult<Json<Session>> {
    let session = blocking(move || Ok(state.users.authenticate(&body.email, &body.password)?)).await?;
    Ok(Json(session))
}

async fn logout(State(state): State<Shared>, caller: Caller) -> StatusCode {
    state.users.logout(&caller.session.token);
    StatusCode::NO_CONTENT
}

async fn me(State(state): State<Shared>, caller: Caller) -> ApiResult<Json<UserProfile>> {
    Ok(Json(state.users.get_profile(&caller.session, &caller.session.uid)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateMeBody {
    pub name: String,
}

async fn update_me(
    State(state): State<Shared>,
    caller: Caller,
    ApiJson(body): ApiJson<UpdateMeBody>,
) -> ApiResult<Json<UserProfile>> {
    let s = &caller.session;
    Ok(Json(state.users.rename(s, &s.uid, &body.name)?))
}

async fn choose_diet(
    State(state): State<Shared>,
    caller: Caller,
    Path(name): Path<String>,
) -> ApiResult<Json<UserProfile>> {
    let s = &caller.session;
    let catalog = state.catalog();
    Ok(Json(state.users.choose_diet(s, &s.uid, &name, &catalog)?))
}

async fn remove_diet(
    State(state): State<Shared>,
    caller: Caller,
    Path(name): Path<String>,
) -> ApiResult<Json<UserProfile>> {
    let s = &caller.session;
    Ok(Json(state.users.remove_diet(s, &s.uid, &name)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngredientBody {
    pub ingredient: String,
}

async fn add_ingredient(
    State(state): State<Shared>,
    caller: Caller,
    ApiJson(body): ApiJson<IngredientBody>,
) -> ApiResult<Json<UserProfile>> {
    let s = &caller.session;
    Ok(Json(state.users.add_custom_ingredient(s, &s.uid, &body.ingredient)?))
}

async fn remove_ingredient(
    State(state): State<Shared>,
    caller: Caller,
    Path(ingredient): Path<String>,
) -> ApiResult<Json<UserProfile>> {
    let s = &caller.session;
    Ok(Json(state.users.remove_custom_ingredient(s, &s.uid, &ingredient)?))
}

async fn list_diets(State(state): State<Shared>) -> Json<Vec<DietSummary>> {
    Json(state.catalog().list_diets())
}

async fn get_diet(State(state): State<Shared>, Path(name): Path<String>) -> ApiResult<Json<Diet>> {
    Ok(Json(state.catalog().get_diet(&name)?.clone()))
}

/// Exactly one of the three label sources.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckBody {
    pub text: Option<String>,
    pub fragments: Option<Vec<String>>,
    pub image_base64: Option<String>,
}

async fn check(
    State(state): State<Shared>,
    caller: Caller,
    ApiJson(body): ApiJson<CheckBody>,
) -> ApiResult<Json<FilterResult>> {
    let request = match (body.text, body.fragments, body.image_base64) {
        (Some(text), None, None) => CaptureRequest::Raw(text),
        (None, Some(fragments), None) => {
            CaptureRequest::Fragments(fragments.into_iter().map(TextFragment::from).collect())
        }
        (None, None, Some(encoded)) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(encoded.trim())
                .map_err(|e| ApiError::bad_request(format!("image_base64 is not valid base64: {e}")))?;
            CaptureRequest::ImageBytes(bytes)
        }
        _ => {
            return Err(ApiError::bad_request(
                "provide exactly one of \"text\", \"fragments\" or \"image_base64\"",
            ))
        }
    };
    run_check(state, caller, request).await
}

async fn check_image(State(state): State<Shared>, caller: Caller, body: Bytes) -> ApiResult<Json<FilterResult>> {
    run_check(state, caller, CaptureRequest::ImageBytes(body.to_vec())).await
}

async fn run_check(state: Shared, caller: Caller, request: CaptureRequest) -> ApiResult<Json<FilterResult>> {
    let profile = state.users.get_profile(&caller.session, &caller.session.uid)?;
    let input = match request {
        CaptureRequest::Raw(text) => LabelInput::Raw(text),
        CaptureRequest::Fragments(fragments) if fragments.iter().all(TextFragment::is_blank) => {
            return Err(diethelper_core::CaptureError::NoTextFound.into());
        }
        CaptureRequest::Fragments(fragments) => LabelInput::Fragments(fragments),
        image => {
            let ocr = state.ocr.clone();
            let outcome = blocking(move || Ok(extract_fragments(image, ocr.as_deref())?)).await?;
            LabelInput::Fragments(outcome.fragments)
        }
    };
    let matcher = {
        let catalog = state.catalog();
        state.matchers.matcher_for(&profile, &catalog)
    };
    Ok(Json(check_label_with(&input, &matcher)?))
}

async fn get_user(
    State(state): State<Shared>,
    caller: Caller,
    Path(uid): Path<String>,
) -> ApiResult<Json<UserProfile>> {
    Ok(Json(state.users.get_profile(&caller.session, &uid)?))
}

async fn admin_list_users(State(state): State<Shared>, caller: Caller) -> ApiResult<Json<Vec<UserProfile>>> {
    Ok(Json(state.users.list_users(&caller.session)?))
}

async fn admin_delete_user(
    State(state): State<Shared>,
    caller: Caller,
    Path(uid): Path<String>,
) -> ApiResult<StatusCode> {
    state.users.admin_delete_user(&caller.session, &uid)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DietBody {
    #[serde(default)]
    pub description: String,
    pub forbidden_ingredients: Vec<String>,
}

async fn admin_put_diet(
    State(state): State<Shared>,
    caller: Caller,
    Path(name): Path<String>,
    ApiJson(body): ApiJson<DietBody>,
) -> ApiResult<Json<Diet>> {
    if !caller.session.is_admin() {
        return Err(diethelper_core::CatalogError::Unauthorized.into());
    }
    let diet =
        Diet::new(name, body.description, body.forbidden_ingredients).map_err(diethelper_core::CatalogError::from)?;
    state.catalog_mut().upsert_diet(caller.session.role, diet.clone())?;
    Ok(Json(diet))
}

async fn admin_delete_diet(
    State(state): State<Shared>,
    caller: Caller,
    Path(name): Path<String>,
) -> ApiResult<StatusCode> {
    state.catalog_mut().delete_diet(caller.session.role, &name)?;
    Ok(StatusCode::NO_CONTENT)
}
