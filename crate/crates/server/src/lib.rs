//! HTTP front end: one in-memory [`Session`] per student, each behind its
//! own FIFO lock so requests for a session apply in arrival order while
//! different sessions proceed in parallel.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use modstat_core::par::Parallelism;
use modstat_core::registry::{discover, nav_structure, Registry, RegistryError};
use modstat_core::session::{Session, SessionError};

pub mod themes;

pub const DEFAULT_UPLOAD_LIMIT: usize = 8 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub modules_dir: PathBuf,
    pub enabled: Option<Vec<String>>,
    pub theme: String,
    pub port: u16,
    pub session_ttl: Duration,
    pub upload_limit: usize,
}

impl ServerConfig {
    pub fn new(modules_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            modules_dir: modules_dir.into(),
            enabled: None,
            theme: "default".into(),
            port: 8080,
            session_ttl: Duration::from_secs(2 * 3600),
            upload_limit: DEFAULT_UPLOAD_LIMIT,
        }
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("unknown theme `{name}`; available themes: {}", available.join(", "))]
    UnknownTheme { name: String, available: Vec<&'static str> },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

struct Slot {
    session: Arc<tokio::sync::Mutex<Session>>,
    last_access: Instant,
}

pub struct AppState {
    registry: Arc<Registry>,
    theme: &'static str,
    ttl: Duration,
    upload_limit: usize,
    mode: Parallelism,
    sessions: Mutex<HashMap<String, Slot>>,
}

impl AppState {
    pub fn new(config: &ServerConfig) -> Result<Self, StartupError> {
        let theme = themes::stylesheet_name(&config.theme)
            .ok_or_else(|| StartupError::UnknownTheme { name: config.theme.clone(), available: themes::names() })?;
        let registry = discover(&config.modules_dir, config.enabled.as_deref())?;
        Ok(AppState {
            registry: Arc::new(registry),
            theme,
            ttl: config.session_ttl,
            upload_limit: config.upload_limit,
            mode: Parallelism::default(),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn session_count(&self) -> usize {
        self.slots().len()
    }

    fn slots(&self) -> std::sync::MutexGuard<'_, HashMap<String, Slot>> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn insert(&self, session: Session) -> String {
        let id = session.id().to_string();
        let slot = Slot { session: Arc::new(tokio::sync::Mutex::new(session)), last_access: Instant::now() };
        self.slots().insert(id.clone(), slot);
        id
    }

    fn lookup(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        let mut slots = self.slots();
        let slot = slots.get_mut(id).ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
        slot.last_access = Instant::now();
        Ok(slot.session.clone())
    }

    /// Drops sessions idle for longer than the configured TTL.
    pub fn evict_expired(&self, now: Instant) -> usize {
        let mut slots = self.slots();
        let before = slots.len();
        slots.retain(|_, s| now.saturating_duration_since(s.last_access) <= self.ttl);
        before - slots.len()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use SessionError::*;
        let status = match &e {
            UnknownModule(_) | UnknownInput(_) => StatusCode::NOT_FOUND,
            InvalidValue { .. } | SliderRange { .. } | Data(_) | Replay(_) => StatusCode::UNPROCESSABLE_ENTITY,
            NothingToStore(_) | ErroredResult { .. } => StatusCode::CONFLICT,
            AlreadyWired(_) | Graph(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!("session fault: {e}");
        }
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs `f` on the session once every earlier request for it has finished.
async fn with_session<R, F>(state: &AppState, id: &str, f: F) -> ApiResult<R>
where
    F: FnOnce(&mut Session) -> ApiResult<R> + Send + 'static,
    R: Send + 'static,
{
    let session = state.lookup(id)?;
    // tokio's mutex grants the lock in request order
    let mut guard = session.lock_owned().await;
    tokio::task::spawn_blocking(move || f(&mut guard))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))?
}

async fn blocking<R: Send + 'static>(f: impl FnOnce() -> ApiResult<R> + Send + 'static) -> ApiResult<R> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))?
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
}

async fn create_session(State(state): State<Arc<AppState>>) -> ApiResult<Json<SessionCreated>> {
    state.evict_expired(Instant::now());
    let registry = state.registry.clone();
    let session = blocking(move || Ok(Session::new(new_id(), registry)?)).await?;
    Ok(Json(SessionCreated { session_id: state.insert(session) }))
}

#[derive(Deserialize)]
struct UploadQuery {
    filename: Option<String>,
}

async fn upload_data(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<UploadQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    let filename = q.filename.unwrap_or_else(|| "upload.csv".into());
    let summary = with_session(&state, &id, move |s| Ok(s.upload_data(&filename, body.to_vec())?)).await?;
    Ok(Json(summary).into_response())
}

async fn download_data(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let (name, bytes) =
        with_session(&state, &id, |s| Ok((s.filename().to_string(), s.uploaded_bytes().to_vec()))).await?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (header::CONTENT_DISPOSITION, attachment(&name)),
        ],
        bytes,
    )
        .into_response())
}

fn attachment(name: &str) -> String {
    let safe: String = name.chars().map(|c| if c == '"' || c == '\\' || c.is_control() { '_' } else { c }).collect();
    format!("attachment; filename=\"{safe}\"")
}

async fn list_modules(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "sections": nav_structure(&state.registry),
        "enabled": state.registry.ids(),
        "theme": state.theme,
    }))
}

async fn module_ui(
    State(state): State<Arc<AppState>>,
    Path((id, cat, name)): Path<(String, String, String)>,
) -> ApiResult<Response> {
    let module = format!("{cat}/{name}");
    let ui = with_session(&state, &id, move |s| Ok(s.module_ui(&module)?)).await?;
    Ok(Json(ui).into_response())
}

#[derive(Deserialize)]
struct InputBody {
    value: serde_json::Value,
}

async fn set_input(
    State(state): State<Arc<AppState>>,
    Path((id, input)): Path<(String, String)>,
    Json(body): Json<InputBody>,
) -> ApiResult<Response> {
    let changes = with_session(&state, &id, move |s| Ok(s.set_input(&input, &body.value)?)).await?;
    Ok(Json(changes).into_response())
}

async fn store(
    State(state): State<Arc<AppState>>,
    Path((id, cat, name)): Path<(String, String, String)>,
) -> ApiResult<Json<serde_json::Value>> {
    let module = format!("{cat}/{name}");
    let len = with_session(&state, &id, move |s| Ok(s.store_result(&module)?)).await?;
    Ok(Json(json!({ "script_length": len })))
}

#[derive(Deserialize)]
struct ScriptQuery {
    #[serde(default)]
    download: bool,
}

async fn get_script(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ScriptQuery>,
) -> ApiResult<Response> {
    let text = with_session(&state, &id, |s| Ok(s.script_text())).await?;
    let mut headers = vec![(header::CONTENT_TYPE, "text/plain; charset=utf-8".to_string())];
    if q.download {
        headers.push((header::CONTENT_DISPOSITION, attachment("analysis.modstat")));
    }
    let headers: axum::http::HeaderMap =
        headers.into_iter().map(|(k, v)| (k, v.parse().expect("ascii header"))).collect();
    Ok((headers, text).into_response())
}

#[derive(Deserialize, Serialize)]
struct Visibility {
    visible: bool,
}

async fn set_visibility(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<Visibility>,
) -> ApiResult<Json<Visibility>> {
    let visible = with_session(&state, &id, move |s| {
        s.set_code_visibility(body.visible);
        Ok(s.code_visible())
    })
    .await?;
    Ok(Json(Visibility { visible }))
}

#[derive(Serialize)]
pub struct ReportBundle {
    pub markdown: String,
    pub images: BTreeMap<String, String>,
    pub include_code: bool,
}

async fn report(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<ReportBundle>> {
    let mode = state.mode;
    let bundle = with_session(&state, &id, move |s| {
        let doc = s.render_report(mode).map_err(|e| {
            // replay of a live script should never fail
            tracing::error!("report replay failed for session {}: {e}", s.id());
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        })?;
        Ok(ReportBundle { markdown: doc.to_markdown(), include_code: doc.include_code, images: doc.images })
    })
    .await?;
    Ok(Json(bundle))
}

#[derive(Deserialize)]
struct ResumeBody {
    script: String,
    csv: String,
    /// Used when the script has no `load_data` statement.
    filename: Option<String>,
}

async fn resume(State(state): State<Arc<AppState>>, Json(body): Json<ResumeBody>) -> ApiResult<Json<SessionCreated>> {
    let registry = state.registry.clone();
    let session = blocking(move || {
        let fallback = body.filename.unwrap_or_else(|| "data.csv".into());
        Ok(Session::resume(new_id(), registry, &body.script, &fallback, body.csv.into_bytes())?)
    })
    .await?;
    Ok(Json(SessionCreated { session_id: state.insert(session) }))
}

async fn index() -> Html<&'static str> {
    Html(include_str!("../static/index.html"))
}

async fn stylesheet(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "text/css")], themes::stylesheet(state.theme)).into_response()
}

pub fn app(state: Arc<AppState>) -> Router {
    let limit = state.upload_limit;
    Router::new()
        .route("/", get(index))
        .route("/theme.css", get(stylesheet))
        .route("/api/modules", get(list_modules))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/resume", post(resume))
        .route("/api/sessions/{id}/data", post(upload_data).get(download_data))
        .route("/api/sessions/{id}/modules/{cat}/{name}/ui", get(module_ui))
        .route("/api/sessions/{id}/modules/{cat}/{name}/store", post(store))
        .route("/api/sessions/{id}/inputs/{input_id}", put(set_input))
        .route("/api/sessions/{id}/script", get(get_script))
        .route("/api/sessions/{id}/code-visibility", put(set_visibility))
        .route("/api/sessions/{id}/report", post(report))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

pub async fn serve(config: ServerConfig) -> Result<(), Box<dyn std::error::Error>> {
    let state = Arc::new(AppState::new(&config)?);
    tracing::info!(modules = ?state.registry.ids(), theme = state.theme, "starting");
    let sweeper = state.clone();
    let period = (config.session_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = sweeper.evict_expired(Instant::now());
            if n > 0 {
                tracing::info!("evicted {n} idle sessions");
            }
        }
    });
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, app(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
