//! HTTP/JSON facade over the form engine.
//!
//! Every mutating call writes the session document to the data directory
//! before answering, so an acknowledged submission survives a restart.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontoform_core::export;
use ontoform_core::graph::Iri;
use ontoform_core::ontology::{Ontology, OntologyError, Product};
use ontoform_core::orchestrator::{
    load_session, save_session, validate_session_id, FormAnswer, Progress, Session, SessionError,
    SessionState,
};
use ontoform_core::wire::{
    codes, ApiError, CreateSession, NextStep, ProgressCounts, SessionCreated, SessionStatus,
    SubmitAnswer, Submitted,
};
use serde::Deserialize;
use thiserror::Error;
use tokio::sync::Mutex;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid ontology: {0}")]
    Ontology(#[from] OntologyError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Errors on the wire

/// Engine errors rendered as JSON with their HTTP status.
#[derive(Debug)]
pub struct HttpError(pub ApiError);

fn api_error(status: StatusCode, code: &str, message: impl Into<String>) -> HttpError {
    HttpError(ApiError::new(status.as_u16(), code, message))
}

fn bad_request(message: impl Into<String>) -> HttpError {
    api_error(StatusCode::BAD_REQUEST, codes::BAD_REQUEST, message)
}

fn internal(message: impl Into<String>) -> HttpError {
    api_error(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, message)
}

impl From<SessionError> for HttpError {
    fn from(err: SessionError) -> Self {
        HttpError(err.into())
    }
}

impl From<JsonRejection> for HttpError {
    fn from(rejection: JsonRejection) -> Self {
        bad_request(rejection.body_text())
    }
}

impl From<QueryRejection> for HttpError {
    fn from(rejection: QueryRejection) -> Self {
        bad_request(rejection.body_text())
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

// ---------------------------------------------------------------------------
// State

type SessionHandle = Arc<Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    ontology: Arc<Ontology>,
    data_dir: Option<Arc<PathBuf>>,
    sessions: Arc<StdMutex<HashMap<String, SessionHandle>>>,
}

impl AppState {
    /// Shares `ontology` across requests and loads every session document
    /// found in `data_dir`. Documents recorded against another ontology, or
    /// unreadable ones, are skipped with a warning.
    pub fn new(ontology: Ontology, data_dir: Option<PathBuf>) -> Result<Self, ServiceError> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir).map_err(|source| ServiceError::Io {
                path: dir.clone(),
                source,
            })?;
            let entries = std::fs::read_dir(dir).map_err(|source| ServiceError::Io {
                path: dir.clone(),
                source,
            })?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for path in paths {
                let text = std::fs::read_to_string(&path).map_err(|source| ServiceError::Io {
                    path: path.clone(),
                    source,
                })?;
                match load_session(&text, &ontology) {
                    Ok(session) => {
                        sessions.insert(session.id().to_string(), Arc::new(Mutex::new(session)));
                    }
                    Err(err) => tracing::warn!(path = %path.display(), "skipping session: {err}"),
                }
            }
            tracing::info!(count = sessions.len(), dir = %dir.display(), "sessions loaded");
        }
        Ok(AppState {
            ontology: Arc::new(ontology),
            data_dir: data_dir.map(Arc::new),
            sessions: Arc::new(StdMutex::new(sessions)),
        })
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    fn handle(&self, id: &str) -> Result<SessionHandle, HttpError> {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| {
                api_error(
                    StatusCode::NOT_FOUND,
                    codes::SESSION_NOT_FOUND,
                    format!("no session {id:?}"),
                )
            })
    }

    /// Atomic write: temp file, fsync, rename.
    async fn persist(&self, session: &Session) -> Result<(), HttpError> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let doc = save_session(session);
        let path = dir.join(format!("{}.json", session.id()));
        let tmp = dir.join(format!(".{}.json.tmp", session.id()));
        let write = async {
            let mut file = tokio::fs::File::create(&tmp).await?;
            tokio::io::AsyncWriteExt::write_all(&mut file, doc.as_bytes()).await?;
            file.sync_all().await?;
            drop(file);
            tokio::fs::rename(&tmp, &path).await
        };
        write.await.map_err(|e| {
            tracing::error!(path = %path.display(), "persisting session failed: {e}");
            internal(format!("could not persist session: {e}"))
        })
    }
}

// ---------------------------------------------------------------------------
// Handlers

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub format: Option<String>,
}

fn status_of(session: &Session) -> SessionStatus {
    let Progress {
        answered,
        pending,
        state,
    } = session.progress();
    SessionStatus {
        session_id: session.id().to_string(),
        product: session.product().clone(),
        state,
        revision: session.revision(),
        progress: ProgressCounts { answered, pending },
    }
}

async fn list_products(State(state): State<AppState>) -> Json<Vec<Product>> {
    Json(state.ontology.products())
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), HttpError> {
    let Json(body) = body?;
    let product = match state.ontology.resolve_class(&body.product) {
        Some(iri) => iri,
        None => {
            let iri = Iri::new(body.product.clone()).map_err(|e| bad_request(e.to_string()))?;
            return Err(SessionError::UnknownClass(iri).into());
        }
    };
    let id = match body.session_id {
        Some(id) => {
            validate_session_id(&id)?;
            id
        }
        None => uuid::Uuid::new_v4().to_string(),
    };
    let session = Session::start(&state.ontology, &product, &id)?;
    let form = session.current_form(&state.ontology)?;
    // Register under the lock first so a concurrent create with the same id
    // sees it; readers wait on the session mutex until it is persisted.
    let handle = Arc::new(Mutex::new(session));
    let guard = handle.clone().try_lock_owned().expect("fresh mutex");
    {
        let mut sessions = state.sessions.lock().expect("session map poisoned");
        if sessions.contains_key(&id) {
            return Err(api_error(
                StatusCode::CONFLICT,
                codes::SESSION_EXISTS,
                format!("session {id:?} already exists"),
            ));
        }
        sessions.insert(id.clone(), handle);
    }
    if let Err(err) = state.persist(&guard).await {
        state
            .sessions
            .lock()
            .expect("session map poisoned")
            .remove(&id);
        return Err(err);
    }
    drop(guard);
    tracing::info!(session = %id, product = %product, "session started");
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id,
            revision: 0,
            form,
        }),
    ))
}

async fn get_session(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionStatus>, HttpError> {
    let handle = state.handle(&id)?;
    let session = handle.lock().await;
    Ok(Json(status_of(&session)))
}

async fn get_form(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<NextStep>, HttpError> {
    let handle = state.handle(&id)?;
    let session = handle.lock().await;
    if session.state() == SessionState::Complete {
        return Ok(Json(NextStep::Done {
            state: SessionState::Complete,
        }));
    }
    Ok(Json(NextStep::Form(session.current_form(&state.ontology)?)))
}

async fn submit_answer(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SubmitAnswer>, JsonRejection>,
) -> Result<Json<Submitted>, HttpError> {
    let handle = state.handle(&id)?;
    let Json(body) = body?;
    let mut session = handle.lock().await;
    if body.revision != session.revision() {
        return Err(api_error(
            StatusCode::CONFLICT,
            codes::CONFLICT,
            format!(
                "revision {} is out of date, session is at {}",
                body.revision,
                session.revision()
            ),
        ));
    }
    let answer = FormAnswer::from_json(body.form_id, &body.values)?;
    let mut next = session.clone();
    next.submit_form(&state.ontology, &answer)?;
    state.persist(&next).await?;
    *session = next;
    let form = match session.state() {
        SessionState::InProgress => Some(session.current_form(&state.ontology)?),
        SessionState::Complete => None,
    };
    Ok(Json(Submitted {
        revision: session.revision(),
        state: session.state(),
        form,
    }))
}

async fn export_session(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<ExportQuery>, QueryRejection>,
) -> Result<Response, HttpError> {
    let Query(query) = query?;
    let handle = state.handle(&id)?;
    let session = handle.lock().await;
    let (body, media, extension) = match query.format.as_deref().unwrap_or("ttl") {
        "ttl" => (
            export::to_rdf(&session),
            "text/turtle; charset=utf-8",
            "ttl",
        ),
        "html" => (
            export::to_html(&session, &state.ontology),
            "text/html; charset=utf-8",
            "html",
        ),
        other => {
            return Err(bad_request(format!(
                "unknown export format {other:?}, expected ttl or html"
            )))
        }
    };
    let disposition = HeaderValue::from_str(&format!(
        "attachment; filename=\"{}.{extension}\"",
        session.id()
    ))
    .map_err(|e| internal(e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static(media)),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        body,
    )
        .into_response())
}

async fn fallback() -> HttpError {
    api_error(StatusCode::NOT_FOUND, codes::NOT_FOUND, "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/products", get(list_products))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/form", get(get_form))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/export", get(export_session));
    Router::new()
        .nest("/api", api)
        .fallback(fallback)
        .with_state(state)
}

// ---------------------------------------------------------------------------
// Startup

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub ontology: PathBuf,
    pub root: Option<Iri>,
    pub bind: SocketAddr,
    pub data_dir: Option<PathBuf>,
}

pub fn load_ontology(path: &Path, root: Option<Iri>) -> Result<Ontology, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Ontology::from_turtle(&text, root)?)
}

/// Serves `state` on an already bound listener until `shutdown` resolves.
pub async fn serve_on<F>(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: F,
) -> Result<(), ServiceError>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|source| ServiceError::Io {
            path: PathBuf::from("<socket>"),
            source,
        })
}

/// Binds and serves until ctrl-c.
pub async fn serve(config: ServeConfig) -> Result<(), ServiceError> {
    let ontology = load_ontology(&config.ontology, config.root.clone())?;
    let state = AppState::new(ontology, config.data_dir.clone())?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.bind,
            source,
        })?;
    let addr = listener.local_addr().unwrap_or(config.bind);
    tracing::info!(%addr, "listening");
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
