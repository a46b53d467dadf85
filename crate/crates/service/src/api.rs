//! HTTP routes. Errors are `{"error": <kind>, "message": <text>}`.

use std::path::{Component, Path};
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use chrono::{DateTime, Utc};
use gardentrack_core::report::hotspots_geojson;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::catalog::{Submission, SurveyFilter, SurveyRecord};
use crate::error::ServiceError;
use crate::metadata::SurveyMetadata;
use crate::service::Service;

pub const DUPLICATE_HEADER: &str = "x-duplicate";

pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::UnreadableFile(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::UnknownSurvey(_) | ServiceError::NoAnalyzedSurveys => StatusCode::NOT_FOUND,
            ServiceError::ReportNotReady { .. } | ServiceError::InvalidTransition { .. } => {
                StatusCode::CONFLICT
            }
            ServiceError::Config(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Corrupt { .. } | ServiceError::Io { .. } | ServiceError::Core(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let body = json!({"error": self.0.kind(), "message": self.0.to_string()});
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(service: Arc<Service>) -> Router {
    let limit = service.config().max_upload_bytes;
    let protected = Router::new()
        .route("/surveys", post(submit).get(list))
        .route("/surveys/{id}", get(get_survey))
        .route("/surveys/{id}/process", post(reprocess))
        .route("/surveys/{id}/report", get(get_report))
        .route("/surveys/{id}/report/{file}", get(get_report_file))
        .route("/hotspots", post(hotspots))
        .route("/webhook/bot", post(webhook))
        .layer(middleware::from_fn_with_state(service.clone(), require_token));
    Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .merge(protected)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(service)
}

async fn require_token(State(svc): State<Arc<Service>>, req: Request, next: Next) -> Response {
    if let Some(token) = &svc.config().token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError(ServiceError::Unauthorized).into_response();
        }
    }
    next.run(req).await
}

fn submission_response(sub: Submission) -> Response {
    let (status, dup) = if sub.is_duplicate() {
        (StatusCode::OK, "true")
    } else {
        (StatusCode::CREATED, "false")
    };
    let mut resp = (status, Json(sub.record().clone())).into_response();
    resp.headers_mut()
        .insert(DUPLICATE_HEADER, HeaderValue::from_static(dup));
    resp
}

fn parse_time(field: &str, v: &str) -> Result<DateTime<Utc>, ServiceError> {
    DateTime::parse_from_rfc3339(v.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| ServiceError::BadRequest(format!("{field}: {e}")))
}

/// Multipart fields: `file` (required), `user_handle` (required),
/// `device_model`, `start_time` (RFC 3339), or `metadata` as a JSON object
/// with those two keys.
async fn submit(State(svc): State<Arc<Service>>, mut form: Multipart) -> ApiResult<Response> {
    let limit = svc.config().max_upload_bytes;
    let bad = |e: axum::extract::multipart::MultipartError| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ServiceError::TooLarge { limit }
        } else {
            ServiceError::BadRequest(e.body_text())
        }
    };
    let mut file = None;
    let mut user = None;
    let mut declared = SurveyMetadata::default();
    while let Some(field) = form.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "file" => file = Some(field.bytes().await.map_err(bad)?.to_vec()),
            "user_handle" => user = Some(field.text().await.map_err(bad)?),
            "device_model" => {
                let v = field.text().await.map_err(bad)?;
                declared.device_model = Some(v.trim().to_string()).filter(|s| !s.is_empty());
            }
            "start_time" => {
                let v = field.text().await.map_err(bad)?;
                if !v.trim().is_empty() {
                    declared.start_time = Some(parse_time("start_time", &v)?);
                }
            }
            "metadata" => {
                let v = field.text().await.map_err(bad)?;
                let m: SurveyMetadata = serde_json::from_str(&v)
                    .map_err(|e| ServiceError::BadRequest(format!("metadata: {e}")))?;
                declared.device_model = m.device_model.or(declared.device_model);
                declared.start_time = m.start_time.or(declared.start_time);
            }
            other => {
                return Err(ServiceError::BadRequest(format!("unexpected field {other:?}")).into())
            }
        }
    }
    let file = file.ok_or_else(|| ServiceError::UnreadableFile("missing file field".into()))?;
    let user = user.ok_or_else(|| ServiceError::BadRequest("missing user_handle field".into()))?;
    Ok(submission_response(svc.submit_survey(file, &user, declared).await?))
}

async fn list(
    State(svc): State<Arc<Service>>,
    Query(filter): Query<SurveyFilter>,
) -> Json<Vec<SurveyRecord>> {
    Json(svc.list_surveys(&filter))
}

async fn get_survey(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SurveyRecord>> {
    Ok(Json(svc.get_survey(&id)?))
}

async fn reprocess(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SurveyRecord>> {
    svc.get_survey(&id)?;
    Ok(Json(svc.process_survey(&id).await?))
}

async fn get_report(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(Json(svc.get_report(&id)?).into_response())
}

async fn get_report_file(
    State(svc): State<Arc<Service>>,
    UrlPath((id, file)): UrlPath<(String, String)>,
) -> ApiResult<Response> {
    let bytes = svc.report_file(&id, &file)?;
    let mime = match Path::new(&file).extension().and_then(|e| e.to_str()) {
        Some("csv") => "text/csv",
        Some("geojson") => "application/geo+json",
        _ => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

/// Body: filter fields plus optional `merge_radius_m`.
async fn hotspots(
    State(svc): State<Arc<Service>>,
    body: Option<Json<serde_json::Value>>,
) -> ApiResult<Response> {
    let mut value = body.map(|Json(v)| v).unwrap_or_else(|| json!({}));
    let radius = match value.as_object_mut().and_then(|o| o.remove("merge_radius_m")) {
        None | Some(serde_json::Value::Null) => svc.config().merge_radius_m,
        Some(v) => v
            .as_f64()
            .ok_or_else(|| ServiceError::BadRequest("merge_radius_m must be a number".into()))?,
    };
    let filter: SurveyFilter =
        serde_json::from_value(value).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    let hs = svc.cluster_all(&filter, radius).await?;
    let geojson = hotspots_geojson(&hs, svc.projection());
    Ok(([(header::CONTENT_TYPE, "application/geo+json")], geojson).into_response())
}

/// Bot-style update, modelled on a messenger's document message.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BotUpdate {
    pub update_id: i64,
    pub message: BotMessage,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BotMessage {
    pub from: BotUser,
    pub document: Option<BotDocument>,
    #[serde(default)]
    pub caption: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BotUser {
    pub id: i64,
    pub username: Option<String>,
}

/// File reference: inline base64 content or a path inside the configured inbox.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BotDocument {
    pub file_name: Option<String>,
    pub content_base64: Option<String>,
    pub file_path: Option<String>,
}

#[derive(Debug, Serialize)]
struct BotReply {
    ok: bool,
    reply: String,
    record: SurveyRecord,
}

/// `device_model=` and `start_time=` lines in the caption are declared metadata.
fn caption_metadata(caption: Option<&str>) -> Result<SurveyMetadata, ServiceError> {
    let mut m = SurveyMetadata::default();
    for line in caption.unwrap_or_default().lines() {
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "device_model" => m.device_model = Some(v.trim().to_string()),
                "start_time" => m.start_time = Some(parse_time("start_time", v)?),
                _ => {}
            }
        }
    }
    Ok(m)
}

fn read_inbox(svc: &Service, rel: &str) -> Result<Vec<u8>, ServiceError> {
    let inbox = svc
        .config()
        .bot_inbox
        .as_ref()
        .ok_or_else(|| ServiceError::BadRequest("file_path needs a configured bot_inbox".into()))?;
    let rel = Path::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ServiceError::BadRequest("file_path must stay inside the inbox".into()));
    }
    let path = inbox.join(rel);
    std::fs::read(&path).map_err(|e| ServiceError::UnreadableFile(format!("{}: {e}", path.display())))
}

async fn webhook(
    State(svc): State<Arc<Service>>,
    Json(update): Json<BotUpdate>,
) -> ApiResult<Response> {
    let msg = update.message;
    let doc = msg
        .document
        .ok_or_else(|| ServiceError::BadRequest("update carries no document".into()))?;
    let bytes = match (&doc.content_base64, &doc.file_path) {
        (Some(b64), _) => base64::engine::general_purpose::STANDARD
            .decode(b64.trim())
            .map_err(|e| ServiceError::UnreadableFile(format!("content_base64: {e}")))?,
        (None, Some(p)) => read_inbox(&svc, p)?,
        (None, None) => {
            return Err(ServiceError::BadRequest("document has neither content nor path".into()).into())
        }
    };
    let user = msg
        .from
        .username
        .clone()
        .unwrap_or_else(|| format!("id:{}", msg.from.id));
    let declared = caption_metadata(msg.caption.as_deref())?;
    let sub = svc.submit_survey(bytes, &user, declared).await?;
    let name = doc.file_name.unwrap_or_else(|| "file".into());
    let record = sub.record().clone();
    let reply = if sub.is_duplicate() {
        format!("{name} was already received as survey {} ({})", record.survey_id, record.status)
    } else {
        format!("{name} received as survey {}; processing started", record.survey_id)
    };
    let status = if sub.is_duplicate() { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(BotReply { ok: true, reply, record })).into_response())
}
