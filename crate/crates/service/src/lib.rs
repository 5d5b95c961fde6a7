//! HTTP endpoints over capture analysis and the side-channel models.
//!
//! | Method | Path           | Body                               | Response                      |
//! |--------|----------------|------------------------------------|-------------------------------|
//! | POST   | `/classify`    | multipart, file field `capture`    | capture report JSON           |
//! | POST   | `/classifyKex` | CSV (raw, or multipart field `csv`)| `{"predictions":[..]}`        |
//! | POST   | `/classifySig` | as `/classifyKex`                  | as `/classifyKex`             |
//! | GET    | `/healthz`     |                                    | `{"status":"ok","models":..}` |
//!
//! Errors are `{"error": "..."}` with status 400, 413 or 503.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pqscope_core::capture::CaptureError;
use pqscope_core::{analyze_capture, load_builtin, EvalOptions, ProfileSet};
use pqscope_ml::{load_csv, load_model, predict, MlError, TrainedModel};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_UPLOAD: usize = 64 << 20;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot load model {path}: {message}")]
    Model { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub max_upload_bytes: usize,
    pub kex_model_path: Option<PathBuf>,
    pub sig_model_path: Option<PathBuf>,
    pub tolerance: usize,
    pub prefer_pq: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: DEFAULT_BIND.parse().unwrap(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD,
            kex_model_path: None,
            sig_model_path: None,
            tolerance: 0,
            prefer_pq: false,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `PQSCOPE_BIND`, `PQSCOPE_KEX_MODEL` and
    /// `PQSCOPE_SIG_MODEL`.
    pub fn from_env() -> Result<Self, ServiceError> {
        Self::from_vars(|k| std::env::var(k).ok())
    }

    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        let mut c = ServiceConfig::default();
        if let Some(b) = var("PQSCOPE_BIND") {
            c.bind = b
                .parse()
                .map_err(|_| ServiceError::Config(format!("PQSCOPE_BIND: bad address {b:?}")))?;
        }
        c.kex_model_path = var("PQSCOPE_KEX_MODEL").map(PathBuf::from);
        c.sig_model_path = var("PQSCOPE_SIG_MODEL").map(PathBuf::from);
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.max_upload_bytes == 0 {
            return Err(ServiceError::Config("max_upload_bytes must be positive".into()));
        }
        Ok(())
    }
}

/// Immutable state shared by all requests.
#[derive(Debug)]
pub struct AppState {
    pub profiles: ProfileSet,
    pub eval: EvalOptions,
    pub kex_model: Option<TrainedModel>,
    pub sig_model: Option<TrainedModel>,
    pub max_upload_bytes: usize,
}

fn read_model(path: &PathBuf) -> Result<TrainedModel, ServiceError> {
    let err = |message: String| ServiceError::Model {
        path: path.clone(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    load_model(&text).map_err(|e| err(e.to_string()))
}

impl AppState {
    /// Loads the configured models; any failure is fatal.
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        Ok(AppState {
            profiles: load_builtin(),
            eval: EvalOptions {
                tolerance: config.tolerance,
                prefer_pq: config.prefer_pq,
                ssh_size_only: false,
            },
            kex_model: config.kex_model_path.as_ref().map(read_model).transpose()?,
            sig_model: config.sig_model_path.as_ref().map(read_model).transpose()?,
            max_upload_bytes: config.max_upload_bytes,
        })
    }
}

struct ApiError(StatusCode, Value);

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError(status, json!({ "error": message.into() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<axum::extract::multipart::MultipartError> for ApiError {
    fn from(e: axum::extract::multipart::MultipartError) -> Self {
        let status = e.status();
        if status == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(status, "upload too large")
        } else {
            ApiError::new(StatusCode::BAD_REQUEST, e.body_text())
        }
    }
}

fn is_multipart(req: &Request) -> bool {
    req.headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"))
}

/// The named multipart field, or the first field when `name` is absent.
async fn multipart_field(req: Request, name: &str, allow_first: bool) -> Result<Bytes, ApiError> {
    let mut mp = Multipart::from_request(req, &())
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
    let mut first = None;
    while let Some(field) = mp.next_field().await? {
        let matches = field.name() == Some(name);
        let data = field.bytes().await?;
        if matches {
            return Ok(data);
        }
        if first.is_none() {
            first = Some(data);
        }
    }
    match first {
        Some(d) if allow_first => Ok(d),
        _ => Err(ApiError::new(StatusCode::BAD_REQUEST, format!("missing multipart field {name:?}"))),
    }
}

async fn raw_body(req: Request, limit: usize) -> Result<Bytes, ApiError> {
    axum::body::to_bytes(req.into_body(), limit)
        .await
        .map_err(|_| ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "upload too large"))
}

async fn classify(State(state): State<Arc<AppState>>, req: Request) -> Result<Response, ApiError> {
    if !is_multipart(&req) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "expected multipart/form-data with a \"capture\" field",
        ));
    }
    let data = multipart_field(req, "capture", false).await?;
    match analyze_capture(&data, &state.profiles, &state.eval) {
        Ok(report) => Ok(Json(report).into_response()),
        Err(CaptureError::Io(e)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        Err(_) => Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed capture")),
    }
}

#[derive(Debug, Serialize)]
struct Prediction {
    row: usize,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    given_label: Option<String>,
}

fn ml_error(e: MlError) -> ApiError {
    match e {
        MlError::Value { row, column, message } => ApiError(
            StatusCode::BAD_REQUEST,
            json!({ "error": format!("row {row}, column {column}: {message}"), "row": row, "column": column }),
        ),
        MlError::Io(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        other => ApiError::new(StatusCode::BAD_REQUEST, other.to_string()),
    }
}

async fn classify_csv(state: &AppState, model: Option<&TrainedModel>, which: &str, req: Request) -> Result<Response, ApiError> {
    let model = model.ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, format!("no {which} model configured")))?;
    let data = if is_multipart(&req) {
        multipart_field(req, "csv", true).await?
    } else {
        raw_body(req, state.max_upload_bytes).await?
    };
    let loaded = load_csv(&data[..]).map_err(ml_error)?;
    let labels = predict(model, &loaded.dataset.rows);
    let predictions: Vec<Prediction> = labels
        .into_iter()
        .zip(&loaded.dataset.rows)
        .enumerate()
        .map(|(row, (label, fv))| Prediction {
            row,
            label,
            given_label: fv.label.clone(),
        })
        .collect();
    Ok(Json(json!({ "predictions": predictions, "warnings": loaded.warnings })).into_response())
}

async fn classify_kex(State(state): State<Arc<AppState>>, req: Request) -> Result<Response, ApiError> {
    classify_csv(&state, state.kex_model.as_ref(), "kex", req).await
}

async fn classify_sig(State(state): State<Arc<AppState>>, req: Request) -> Result<Response, ApiError> {
    classify_csv(&state, state.sig_model.as_ref(), "sig", req).await
}

fn model_info(m: Option<&TrainedModel>) -> Value {
    match m {
        None => Value::Null,
        Some(m) => json!({ "schema_version": m.schema_version, "kind": m.kind, "classes": m.classes }),
    }
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "models": {
            "kex": model_info(state.kex_model.as_ref()),
            "sig": model_info(state.sig_model.as_ref()),
        },
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.max_upload_bytes;
    Router::new()
        .route("/classify", post(classify))
        .route("/classifyKex", post(classify_kex))
        .route("/classifySig", post(classify_sig))
        .route("/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Load models, bind, and serve until the process is stopped.
pub async fn serve(config: &ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::load(config)?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    axum::serve(listener, router(state)).await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides() {
        let vars = |k: &str| match k {
            "PQSCOPE_BIND" => Some("0.0.0.0:9000".to_owned()),
            "PQSCOPE_KEX_MODEL" => Some("/tmp/kex.json".to_owned()),
            _ => None,
        };
        let c = ServiceConfig::from_vars(vars).unwrap();
        assert_eq!(c.bind.port(), 9000);
        assert_eq!(c.kex_model_path, Some(PathBuf::from("/tmp/kex.json")));
        assert_eq!(c.sig_model_path, None);
        assert_eq!(c.max_upload_bytes, DEFAULT_MAX_UPLOAD);
        assert!(ServiceConfig::from_vars(|k| (k == "PQSCOPE_BIND").then(|| "nope".to_owned())).is_err());
    }

    #[test]
    fn unloadable_model_is_fatal() {
        let c = ServiceConfig {
            kex_model_path: Some("/nonexistent/model.json".into()),
            ..Default::default()
        };
        assert!(matches!(AppState::load(&c), Err(ServiceError::Model { .. })));
        let zero = ServiceConfig {
            max_upload_bytes: 0,
            ..Default::default()
        };
        assert!(matches!(AppState::load(&zero), Err(ServiceError::Config(_))));
    }
}
