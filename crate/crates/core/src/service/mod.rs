//! HTTP interface.
//!
//! * `POST /AGDISTIS` with form fields `text` and `type`; linker settings may
//!   be overridden through query parameters.
//! * `GET /health` reports the loaded bundle.

mod config;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tower_http::cors::CorsLayer;

use crate::index::{BundleError, FORMAT_VERSION};
use crate::linker::{Linker, RequestType};
use crate::text::TextError;

pub use config::{
    apply_overrides, env_key, load_config, set_linker_key, ServiceConfig, ENV_PREFIX, LINKER_KEYS,
    SERVICE_KEYS,
};

pub const LINK_PATH: &str = "/AGDISTIS";
pub const HEALTH_PATH: &str = "/health";

/// Shared per-process state: one immutable linker, swapped wholesale on
/// reload. Requests arriving during a reload get 503.
pub struct AppState {
    linker: RwLock<Arc<Linker>>,
    reloading: AtomicBool,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(linker: Linker, config: ServiceConfig) -> Self {
        AppState {
            linker: RwLock::new(Arc::new(linker)),
            reloading: AtomicBool::new(false),
            config,
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn linker(&self) -> Arc<Linker> {
        self.linker.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn is_reloading(&self) -> bool {
        self.reloading.load(Ordering::SeqCst)
    }

    /// Marks the service as reloading until the returned guard drops.
    pub fn begin_reload(&self) -> ReloadGuard<'_> {
        self.reloading.store(true, Ordering::SeqCst);
        ReloadGuard { state: self }
    }

    /// Loads a new bundle and swaps it in. On failure the old bundle stays.
    pub fn reload(&self, dir: &Path) -> Result<(), BundleError> {
        let _guard = self.begin_reload();
        let fresh = Linker::open(dir)?;
        *self.linker.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(fresh);
        Ok(())
    }
}

pub struct ReloadGuard<'a> {
    state: &'a AppState,
}

impl Drop for ReloadGuard<'_> {
    fn drop(&mut self) {
        self.state.reloading.store(false, Ordering::SeqCst);
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
}

/// A finished HTTP answer: status plus JSON body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    fn ok(body: String) -> Self {
        Reply { status: 200, body }
    }

    fn error(status: u16, error: &str, message: impl Into<String>) -> Self {
        let body = serde_json::to_string(&ErrorBody {
            error,
            message: message.into(),
        })
        .expect("error body serializes");
        Reply { status, body }
    }
}

/// The `/AGDISTIS` contract without the HTTP plumbing: `query` is the raw
/// query string, `body` the form-encoded request body.
pub fn handle_link(state: &AppState, query: &str, body: &[u8]) -> Reply {
    if state.is_reloading() {
        return Reply::error(503, "Reloading", "bundle reload in progress");
    }
    let mut text = None;
    let mut kind = None;
    for (k, v) in url::form_urlencoded::parse(body) {
        match k.as_ref() {
            "text" => text = Some(v.into_owned()),
            "type" => kind = Some(v.into_owned()),
            _ => {}
        }
    }
    let Some(text) = text else {
        return Reply::error(400, "MissingParameter", "missing parameter: text");
    };
    let Some(kind) = kind else {
        return Reply::error(400, "MissingParameter", "missing parameter: type");
    };
    let kind: RequestType = match kind.parse() {
        Ok(k) => k,
        Err(e) => return Reply::error(400, "InvalidType", e.to_string()),
    };
    let overrides: Vec<(String, String)> = url::form_urlencoded::parse(query.as_bytes()).into_owned().collect();
    let cfg = match apply_overrides(
        &state.config.linker,
        overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    ) {
        Ok(cfg) => cfg,
        Err(e) => return Reply::error(400, "InvalidValue", e.to_string()),
    };
    match state.linker().annotate(&text, kind, &cfg) {
        Ok(response) => Reply::ok(response.to_json()),
        Err(e @ TextError::UnbalancedTag { .. }) => Reply::error(400, "UnbalancedTag", e.to_string()),
        Err(e) => Reply::error(400, "InvalidText", e.to_string()),
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Health {
    status: &'static str,
    language: String,
    kb: String,
    entities: usize,
    format_version: u32,
}

pub fn handle_health(state: &AppState) -> Reply {
    if state.is_reloading() {
        return Reply::error(503, "Reloading", "bundle reload in progress");
    }
    let linker = state.linker();
    let meta = &linker.bundle().meta;
    let health = Health {
        status: "ok",
        language: meta.language.clone(),
        kb: meta.kb_name.clone(),
        entities: linker.bundle().entity_count(),
        format_version: FORMAT_VERSION,
    };
    Reply::ok(serde_json::to_string(&health).expect("health serializes"))
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (
            status,
            [(header::CONTENT_TYPE, "application/json; charset=utf-8")],
            self.body,
        )
            .into_response()
    }
}

async fn link_route(State(state): State<Arc<AppState>>, RawQuery(query): RawQuery, body: Bytes) -> Reply {
    let query = query.unwrap_or_default();
    match tokio::task::spawn_blocking(move || handle_link(&state, &query, &body)).await {
        Ok(reply) => reply,
        Err(e) => Reply::error(500, "Internal", e.to_string()),
    }
}

async fn health_route(State(state): State<Arc<AppState>>) -> Reply {
    handle_health(&state)
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_request_bytes;
    Router::new()
        .route(LINK_PATH, post(link_route))
        .route(HEALTH_PATH, get(health_route))
        .layer(DefaultBodyLimit::max(limit))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds `addr` and serves until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let linker = Linker::open(&config.bundle_dir)?;
    let addr: SocketAddr = format!("{}:{}", config.bind, config.port).parse()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!(
        "serving {} ({} entities) on http://{}{}",
        linker.bundle().meta.kb_name,
        linker.bundle().entity_count(),
        listener.local_addr()?,
        LINK_PATH
    );
    let state = Arc::new(AppState::new(linker, config));
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
