// SPDX-License-Identifier: Apache-2.0

//! JSON-over-HTTP API over a shared [`Workspace`].
//!
//! Mutations take the write lock and bump the revision. Reads obtain an [`Analysis`]
//! snapshot for the current revision, computing it at most once per revision, and
//! answer entirely from that snapshot. Every read body carries its `revision`.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::acetree::{flows_between, is_allowed, PacketQuery, Peer, QueryError};
use crate::finding::Finding;
use crate::model::{DeviceId, Direction};
use crate::summary::summarize;
use crate::workspace::{Analysis, FileId, Workspace, WorkspaceError};

pub const DEFAULT_MAX_BODY: usize = 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Upload size limit in bytes.
    pub max_body: usize,
    /// Directory of built UI assets served at `/`.
    pub static_dir: Option<PathBuf>,
    /// File the workspace is loaded from and saved to after each mutation.
    pub workspace_path: Option<PathBuf>,
    /// Origin allowed by CORS, for a UI dev server on another port.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_body: DEFAULT_MAX_BODY,
            static_dir: None,
            workspace_path: None,
            cors_origin: None,
        }
    }
}

pub struct AppState {
    workspace: RwLock<Workspace>,
    snapshot: Mutex<Option<Arc<Analysis>>>,
    workspace_path: Option<PathBuf>,
}

impl AppState {
    /// Load the persisted workspace when the configured file exists.
    pub fn new(config: &ServiceConfig) -> Result<Self, WorkspaceError> {
        let workspace = match &config.workspace_path {
            Some(path) if path.exists() => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| WorkspaceError::State(format!("{}: {e}", path.display())))?;
                Workspace::from_json(&text)?
            }
            _ => Workspace::new(),
        };
        Ok(Self::with_workspace(
            workspace,
            config.workspace_path.clone(),
        ))
    }

    pub fn with_workspace(workspace: Workspace, workspace_path: Option<PathBuf>) -> Self {
        AppState {
            workspace: RwLock::new(workspace),
            snapshot: Mutex::new(None),
            workspace_path,
        }
    }

    /// Analysis of the current revision.
    pub fn snapshot(&self) -> Arc<Analysis> {
        let ws = self
            .workspace
            .read()
            .unwrap_or_else(PoisonError::into_inner);
        let mut cached = self.snapshot.lock().unwrap_or_else(PoisonError::into_inner);
        match cached.as_ref() {
            Some(a) if a.revision == ws.revision() => a.clone(),
            _ => {
                let fresh = Arc::new(ws.analyze());
                *cached = Some(fresh.clone());
                fresh
            }
        }
    }

    fn mutate<T>(
        &self,
        f: impl FnOnce(&mut Workspace) -> Result<T, WorkspaceError>,
    ) -> Result<T, WorkspaceError> {
        let mut ws = self
            .workspace
            .write()
            .unwrap_or_else(PoisonError::into_inner);
        let before = ws.revision();
        let out = f(&mut ws)?;
        if ws.revision() != before {
            if let Some(path) = &self.workspace_path {
                if let Err(e) = write_atomically(path, ws.to_json().as_bytes()) {
                    log::error!("could not save workspace to {}: {e}", path.display());
                }
            }
        }
        Ok(out)
    }

    fn read<T>(&self, f: impl FnOnce(&Workspace) -> T) -> T {
        f(&self
            .workspace
            .read()
            .unwrap_or_else(PoisonError::into_inner))
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// An error response with a JSON body `{"error": message}`.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        let status = match &e {
            WorkspaceError::NonUtf8 => StatusCode::BAD_REQUEST,
            WorkspaceError::UnknownFile(_) => StatusCode::NOT_FOUND,
            WorkspaceError::Context(c) if c.is_reference_error() => StatusCode::CONFLICT,
            WorkspaceError::Context(_) => StatusCode::BAD_REQUEST,
            WorkspaceError::State(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let status = match e {
            QueryError::UnknownDevice(_) => StatusCode::NOT_FOUND,
            QueryError::InvalidRemote(_) => StatusCode::BAD_REQUEST,
        };
        ApiError(status, e.to_string())
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/mudfiles", get(list_files).post(upload_file))
        .route("/api/mudfiles/{id}", get(get_file).delete(delete_file))
        .route("/api/context", get(get_context).put(put_context))
        .route("/api/graph", get(graph))
        .route("/api/findings", get(findings))
        .route("/api/flows", get(flows))
        .route("/api/query", get(query_get).post(query_post))
        .route("/api/summary/{device}", get(summary))
        .layer(DefaultBodyLimit::max(config.max_body))
        .with_state(state);

    let app = match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    };
    match config.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
                .allow_headers([header::CONTENT_TYPE]),
        ),
        Some(Err(_)) => {
            log::warn!("ignoring invalid CORS origin");
            app
        }
        None => app,
    }
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    let state = AppState::new(&config).map_err(io::Error::other)?;
    let app = router(Arc::new(state), &config);
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
}

async fn index() -> Html<&'static str> {
    Html(concat!(
        "<!doctype html><title>mudkit</title>",
        "<p>mudkit service is running. The API lives under <code>/api</code>; ",
        "start with <code>--static-dir</code> to serve a web UI here.</p>"
    ))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct FileEntry {
    id: FileId,
    label: String,
    mud_url: Option<String>,
    errors: usize,
    warnings: usize,
}

async fn list_files(State(state): State<Shared>) -> Json<serde_json::Value> {
    state.read(|ws| {
        let files: Vec<FileEntry> = ws
            .files()
            .map(|f| {
                let errors = f.result.findings.iter().filter(|x| x.is_error()).count();
                FileEntry {
                    id: f.id,
                    label: f.label(),
                    mud_url: f.result.file.as_ref().map(|m| m.mud_url.clone()),
                    errors,
                    warnings: f.result.findings.len() - errors,
                }
            })
            .collect();
        Json(json!({ "revision": ws.revision(), "files": files }))
    })
}

async fn upload_file(State(state): State<Shared>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let (id, findings, revision) = state.mutate(|ws| {
        let (id, findings) = ws.add_file(&body)?;
        Ok((id, findings, ws.revision()))
    })?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id, "revision": revision, "findings": findings })),
    ))
}

async fn get_file(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<FileId>,
) -> ApiResult<Json<serde_json::Value>> {
    state.read(|ws| {
        let f = ws.file(id).ok_or(WorkspaceError::UnknownFile(id))?;
        Ok(Json(json!({
            "id": f.id,
            "label": f.label(),
            "raw": f.raw,
            "findings": f.result.findings,
        })))
    })
}

async fn delete_file(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<FileId>,
) -> ApiResult<StatusCode> {
    state.mutate(|ws| ws.remove_file(id))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_context(State(state): State<Shared>) -> Json<serde_json::Value> {
    state.read(|ws| Json(json!({ "revision": ws.revision(), "context": ws.context() })))
}

async fn put_context(
    State(state): State<Shared>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let revision = state.mutate(|ws| {
        ws.set_context_json(&body)?;
        Ok(ws.revision())
    })?;
    Ok(Json(json!({ "revision": revision })))
}

async fn graph(State(state): State<Shared>) -> Json<serde_json::Value> {
    let a = state.snapshot();
    Json(json!({ "revision": a.revision, "nodes": a.graph.nodes, "edges": a.graph.edges }))
}

async fn findings(State(state): State<Shared>) -> Json<serde_json::Value> {
    let a = state.snapshot();
    Json(json!({ "revision": a.revision, "findings": a.findings }))
}

#[derive(Deserialize)]
struct FlowsParams {
    src: String,
    dst: String,
}

async fn flows(
    State(state): State<Shared>,
    Query(p): Query<FlowsParams>,
) -> ApiResult<Json<serde_json::Value>> {
    let a = state.snapshot();
    let src = DeviceId::new(&p.src);
    if !a.ruleset.has_device(&src) {
        return Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("unknown device \"{}\"", p.src),
        ));
    }
    let dst_id = DeviceId::new(&p.dst);
    let peer = if a.ruleset.has_device(&dst_id) {
        Peer::Device(dst_id)
    } else if crate::parser::is_hostname(&p.dst) {
        Peer::Domain(p.dst)
    } else {
        return Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("\"{}\" is neither a device nor a domain name", p.dst),
        ));
    };
    let flows = flows_between(&a.ruleset, &src, &peer);
    Ok(Json(json!({ "revision": a.revision, "flows": flows })))
}

#[derive(Deserialize)]
struct QueryParams {
    device: String,
    direction: Direction,
    remote: String,
    protocol: u8,
    #[serde(default)]
    src_port: u16,
    dst_port: u16,
    initiated: Option<Direction>,
}

async fn query_get(
    State(state): State<Shared>,
    Query(p): Query<QueryParams>,
) -> ApiResult<Json<serde_json::Value>> {
    let query = PacketQuery {
        device: DeviceId::new(&p.device),
        direction: p.direction,
        remote: p.remote.parse()?,
        protocol: p.protocol,
        src_port: p.src_port,
        dst_port: p.dst_port,
        initiated: p.initiated,
    };
    run_query(&state, &query)
}

async fn query_post(
    State(state): State<Shared>,
    Json(query): Json<PacketQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    run_query(&state, &query)
}

fn run_query(state: &AppState, query: &PacketQuery) -> ApiResult<Json<serde_json::Value>> {
    let a = state.snapshot();
    let outcome = is_allowed(&a.ruleset, query)?;
    Ok(Json(json!({
        "revision": a.revision,
        "decision": outcome.decision,
        "refs": outcome.refs,
    })))
}

async fn summary(
    State(state): State<Shared>,
    UrlPath(device): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let a = state.snapshot();
    let s = summarize(&a.ruleset, &DeviceId::new(&device))
        .map_err(|e| ApiError(StatusCode::NOT_FOUND, e.to_string()))?;
    let mut body = serde_json::to_value(&s).expect("summary serializes");
    body["revision"] = json!(a.revision);
    Ok(Json(body))
}

/// Findings of one upload, as returned by `POST /api/mudfiles`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub id: FileId,
    pub revision: u64,
    pub findings: Vec<Finding>,
}
