//! JSON API over a catalog snapshot.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/library` | `[{urn, label, language, row_count}]` |
//! | `GET /api/passages/{urn}` | [`PassagePayload`] |
//! | `GET /api/annotations?urn=…&kind=…` | `[{kind, urn, data}]` |
//! | `GET /api/attributions/report` | `[{role, contributor, count}]` |
//!
//! Every request reads one snapshot from start to finish. Responses carry an
//! ETag naming that snapshot.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use arc_swap::ArcSwap;
use atlas_core::annotations::{AnnotationKind, Envelope};
use atlas_core::persist;
use atlas_core::store::{AttributionReportRow, Catalog, StoreError};
use atlas_core::text::TokenKind;
use atlas_core::urn::{parse_cts_urn, CtsUrn, DottedRef, PassagePoint, PassageRef, UrnError, VeRef};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const DEFAULT_PORT: u16 = 7000;
pub const DEFAULT_MAX_TEXT_PARTS: usize = 100;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Longest passage returned in one response; `next` continues after it.
    pub max_text_parts: usize,
    /// Origin allowed by CORS. Any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { max_text_parts: DEFAULT_MAX_TEXT_PARTS, cors_origin: None }
    }
}

pub struct AppState {
    catalog: ArcSwap<Catalog>,
    config: ServerConfig,
    nonce: u64,
}

impl AppState {
    pub fn new(catalog: Catalog, config: ServerConfig) -> Arc<Self> {
        let nonce = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or_default();
        Arc::new(AppState { catalog: ArcSwap::from_pointee(catalog), config, nonce })
    }

    pub fn snapshot(&self) -> Arc<Catalog> {
        self.catalog.load_full()
    }

    /// Makes `catalog` the snapshot for all requests that start afterwards.
    pub fn swap(&self, catalog: Catalog) {
        self.catalog.store(Arc::new(catalog));
    }

    fn etag(&self, catalog: &Catalog) -> String {
        format!("\"{:x}-{:x}\"", self.nonce, catalog.generation())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub urn: String,
    pub label: String,
    pub language: String,
    pub row_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageMetadata {
    pub label: String,
    pub language: String,
    pub citation_scheme: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPayload {
    pub ve_ref: VeRef,
    pub value: String,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPart {
    #[serde(rename = "ref")]
    pub reference: DottedRef,
    pub text: String,
    pub tokens: Vec<TokenPayload>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassagePayload {
    pub urn: String,
    pub metadata: PassageMetadata,
    pub text_parts: Vec<TextPart>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prev: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

pub fn library(catalog: &Catalog) -> Vec<LibraryEntry> {
    catalog
        .versions()
        .map(|v| LibraryEntry {
            urn: v.meta.urn.to_string(),
            label: v.meta.label.clone(),
            language: v.meta.language.clone(),
            row_count: v.text.len(),
        })
        .collect()
}

fn window_urn(version: &CtsUrn, refs: &[DottedRef], window: std::ops::Range<usize>) -> String {
    let first = PassagePoint::new(refs[window.start].clone());
    let passage = if window.len() == 1 {
        PassageRef::point(first)
    } else {
        PassageRef::range(first, PassagePoint::new(refs[window.end - 1].clone()))
    };
    version.with_passage(passage).to_string()
}

/// The rows of `urn`, at most `max_parts` of them, with neighbouring windows of
/// the same size.
pub fn passage_payload(catalog: &Catalog, urn: &CtsUrn, max_parts: usize) -> Result<PassagePayload, StoreError> {
    let positions = catalog.passage_positions(urn)?;
    let entry = catalog.version(urn).ok_or_else(|| StoreError::UnknownVersion(urn.without_passage().to_string()))?;
    let refs = entry.text.index().refs();
    let shown = positions.start..positions.end.min(positions.start + max_parts.max(1));
    let text_parts = shown
        .clone()
        .map(|pos| {
            let row = entry.text.row_at(pos);
            TextPart {
                reference: row.reference.clone(),
                text: row.text.clone(),
                tokens: entry
                    .text
                    .tokens_at(pos)
                    .iter()
                    .map(|t| TokenPayload { ve_ref: t.ve_ref.clone(), value: t.value.clone(), kind: t.kind })
                    .collect(),
            }
        })
        .collect();
    let width = shown.len();
    let (prev, next) = if width == 0 {
        (None, None)
    } else {
        (
            (shown.start > 0)
                .then(|| window_urn(&entry.meta.urn, refs, shown.start.saturating_sub(width)..shown.start)),
            (shown.end < refs.len())
                .then(|| window_urn(&entry.meta.urn, refs, shown.end..(shown.end + width).min(refs.len()))),
        )
    };
    Ok(PassagePayload {
        urn: urn.to_string(),
        metadata: PassageMetadata {
            label: entry.meta.label.clone(),
            language: entry.meta.language.clone(),
            citation_scheme: entry.meta.citation_scheme.clone(),
        },
        text_parts,
        prev,
        next,
    })
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), detail: detail.into() } }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let detail = e.to_string();
        match e {
            StoreError::UnknownVersion(_) => ApiError::new(StatusCode::NOT_FOUND, "UnknownVersion", detail),
            StoreError::UnknownReference(_) => ApiError::new(StatusCode::NOT_FOUND, "UnknownReference", detail),
            StoreError::Urn(UrnError::InvertedRange(_)) => {
                ApiError::new(StatusCode::BAD_REQUEST, "InvertedRange", detail)
            }
            _ => ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", detail),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_urn(text: &str) -> Result<CtsUrn, ApiError> {
    parse_cts_urn(text).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MalformedUrn", e.to_string()))
}

fn respond<T: Serialize>(
    state: &AppState,
    catalog: &Catalog,
    headers: &HeaderMap,
    body: Result<T, ApiError>,
) -> Response {
    let body = match body {
        Ok(b) => b,
        Err(e) => return e.into_response(),
    };
    let etag = state.etag(catalog);
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == etag || t.trim() == "*"));
    let mut response = if matches { StatusCode::NOT_MODIFIED.into_response() } else { Json(body).into_response() };
    if let Ok(v) = HeaderValue::from_str(&etag) {
        response.headers_mut().insert(header::ETAG, v);
    }
    response
}

async fn get_library(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    let catalog = state.snapshot();
    respond(&state, &catalog, &headers, Ok(library(&catalog)))
}

async fn get_passage(
    State(state): State<Arc<AppState>>,
    UrlPath(urn): UrlPath<String>,
    headers: HeaderMap,
) -> Response {
    let catalog = state.snapshot();
    let body = parse_urn(&urn)
        .and_then(|urn| passage_payload(&catalog, &urn, state.config.max_text_parts).map_err(ApiError::from));
    respond(&state, &catalog, &headers, body)
}

#[derive(Debug, Deserialize)]
struct AnnotationQuery {
    urn: Option<String>,
    kind: Option<String>,
}

async fn get_annotations(
    State(state): State<Arc<AppState>>,
    Query(q): Query<AnnotationQuery>,
    headers: HeaderMap,
) -> Response {
    let catalog = state.snapshot();
    let body = (|| {
        let urn = q
            .urn
            .as_deref()
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "MissingParameter", "urn is required"))?;
        let urn = parse_urn(urn)?;
        let kind = match q.kind.as_deref() {
            None | Some("") => None,
            Some(k) => Some(
                k.parse::<AnnotationKind>()
                    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "UnknownKind", e.to_string()))?,
            ),
        };
        let hits = catalog.annotations_overlapping(&urn, kind)?;
        Ok::<Vec<Envelope>, ApiError>(hits.iter().map(|a| a.envelope()).collect())
    })();
    respond(&state, &catalog, &headers, body)
}

async fn get_report(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    let catalog = state.snapshot();
    let body: Vec<AttributionReportRow> = catalog.aggregate_attributions();
    respond(&state, &catalog, &headers, Ok(body))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    let origin = match &state.config.cors_origin {
        Some(o) => match HeaderValue::from_str(o) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => {
                log::warn!("ignoring unusable CORS origin `{o}`");
                AllowOrigin::any()
            }
        },
        None => AllowOrigin::any(),
    };
    let cors =
        CorsLayer::new().allow_origin(origin).allow_methods([axum::http::Method::GET]).expose_headers([header::ETAG]);
    Router::new()
        .route("/api/library", get(get_library))
        .route("/api/passages/{urn}", get(get_passage))
        .route("/api/annotations", get(get_annotations))
        .route("/api/attributions/report", get(get_report))
        .fallback(not_found)
        .layer(cors)
        .with_state(state)
}

/// Swaps in a freshly loaded catalog whenever `<data_dir>/CURRENT` changes.
pub fn spawn_reloader(state: Arc<AppState>, data_dir: PathBuf, every: Duration) -> tokio::task::JoinHandle<()> {
    let mut seen = read_pointer(&data_dir);
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(every);
        loop {
            ticker.tick().await;
            let now = read_pointer(&data_dir);
            if now == seen {
                continue;
            }
            let dir = data_dir.clone();
            match tokio::task::spawn_blocking(move || persist::load(&dir)).await {
                Ok(Ok(catalog)) => {
                    log::info!("loaded snapshot {}", now.as_deref().unwrap_or("-"));
                    state.swap(catalog);
                    seen = now;
                }
                Ok(Err(e)) => log::warn!("reload failed: {e}"),
                Err(e) => log::warn!("reload task failed: {e}"),
            }
        }
    })
}

fn read_pointer(data_dir: &Path) -> Option<String> {
    std::fs::read_to_string(data_dir.join(persist::CURRENT_FILE)).ok().map(|s| s.trim().to_string())
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
