//! The probe service: one worker per backend behind an HTTP and WebSocket
//! front end.
//!
//! | route                                  | answer                          |
//! |----------------------------------------|---------------------------------|
//! | `POST /probe` `{language, source}`     | [`ProbeResult`]                 |
//! | `GET /backends`                        | list of [`BackendInfo`]         |
//! | `GET /recordings/latest?language=`     | last [`ProbeResult`], 404 if none |
//! | `GET /live?language=` (WebSocket)      | every new [`ProbeResult`]       |
//!
//! Each worker runs one submission at a time. A submission waiting behind a
//! running one is replaced by any newer submission; the replaced request is
//! answered with 409.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use liverec_core::recorder::CallerMode;
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, oneshot};

use crate::backend::{Backend, BackendEnv};
use crate::engine::Engine;
use crate::schema::ProbeResult;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubmitError {
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("superseded by a newer submission")]
    Superseded,
    #[error("service is shutting down")]
    ShuttingDown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub id: String,
    pub comment_marker: String,
    pub extension: String,
    pub caller: CallerMode,
    pub compiled: bool,
    pub available: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSubmission {
    pub language: String,
    pub source: String,
}

type Reply = oneshot::Sender<Result<ProbeResult, SubmitError>>;

struct Job {
    source: String,
    reply: Reply,
}

#[derive(Default)]
struct Slot {
    pending: Option<Job>,
    shutdown: bool,
}

struct Worker {
    info: BackendInfo,
    slot: Arc<(Mutex<Slot>, Condvar)>,
    latest: Arc<Mutex<Option<ProbeResult>>>,
    results: broadcast::Sender<ProbeResult>,
    thread: Option<JoinHandle<()>>,
}

pub struct Service {
    workers: BTreeMap<String, Worker>,
}

impl Service {
    /// Starts a worker per backend. Sessions launch on first use.
    pub fn start(backends: Vec<Backend>, env: BackendEnv, max_steps: usize) -> Self {
        let mut workers = BTreeMap::new();
        for backend in backends {
            let info = BackendInfo {
                id: backend.id().to_string(),
                comment_marker: backend.comment_marker().to_string(),
                extension: backend.extension().to_string(),
                caller: backend.caller(),
                compiled: backend.has_compile(),
                available: backend.is_available(&env),
            };
            let slot = Arc::new((Mutex::new(Slot::default()), Condvar::new()));
            let latest = Arc::new(Mutex::new(None));
            let (results, _) = broadcast::channel(64);
            let engine = Engine::new(backend, env.clone()).with_max_steps(max_steps);
            let thread = {
                let (slot, latest, results) = (slot.clone(), latest.clone(), results.clone());
                thread::Builder::new()
                    .name(format!("probe-{}", info.id))
                    .spawn(move || work(engine, &slot, &latest, &results))
                    .expect("spawn worker thread")
            };
            workers.insert(
                info.id.clone(),
                Worker {
                    info,
                    slot,
                    latest,
                    results,
                    thread: Some(thread),
                },
            );
        }
        Self { workers }
    }

    pub fn backends(&self) -> Vec<BackendInfo> {
        self.workers.values().map(|w| w.info.clone()).collect()
    }

    fn worker(&self, language: &str) -> Result<&Worker, SubmitError> {
        self.workers
            .get(language)
            .ok_or_else(|| SubmitError::UnknownLanguage(language.to_string()))
    }

    /// Queues `source`; the receiver yields its result, or `Superseded` if a
    /// newer submission replaced it before it started.
    pub fn enqueue(
        &self,
        language: &str,
        source: String,
    ) -> Result<oneshot::Receiver<Result<ProbeResult, SubmitError>>, SubmitError> {
        let worker = self.worker(language)?;
        let (tx, rx) = oneshot::channel();
        let (lock, cv) = &*worker.slot;
        let mut slot = lock.lock().expect("slot lock");
        if slot.shutdown {
            return Err(SubmitError::ShuttingDown);
        }
        if let Some(old) = slot.pending.replace(Job { source, reply: tx }) {
            let _ = old.reply.send(Err(SubmitError::Superseded));
        }
        cv.notify_one();
        Ok(rx)
    }

    pub async fn submit(&self, language: &str, source: String) -> Result<ProbeResult, SubmitError> {
        let rx = self.enqueue(language, source)?;
        rx.await.unwrap_or(Err(SubmitError::ShuttingDown))
    }

    pub fn submit_blocking(&self, language: &str, source: String) -> Result<ProbeResult, SubmitError> {
        let rx = self.enqueue(language, source)?;
        rx.blocking_recv().unwrap_or(Err(SubmitError::ShuttingDown))
    }

    pub fn latest(&self, language: &str) -> Result<Option<ProbeResult>, SubmitError> {
        Ok(self.worker(language)?.latest.lock().expect("latest lock").clone())
    }

    pub fn subscribe(&self, language: &str) -> Result<broadcast::Receiver<ProbeResult>, SubmitError> {
        Ok(self.worker(language)?.results.subscribe())
    }

    /// Stops the workers after their current submission and ends sessions.
    pub fn shutdown(&mut self) {
        for worker in self.workers.values_mut() {
            let (lock, cv) = &*worker.slot;
            let mut slot = lock.lock().expect("slot lock");
            slot.shutdown = true;
            if let Some(job) = slot.pending.take() {
                let _ = job.reply.send(Err(SubmitError::ShuttingDown));
            }
            cv.notify_all();
        }
        for worker in self.workers.values_mut() {
            if let Some(t) = worker.thread.take() {
                let _ = t.join();
            }
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn work(
    mut engine: Engine,
    slot: &(Mutex<Slot>, Condvar),
    latest: &Mutex<Option<ProbeResult>>,
    results: &broadcast::Sender<ProbeResult>,
) {
    let (lock, cv) = slot;
    loop {
        let job = {
            let mut guard = lock.lock().expect("slot lock");
            loop {
                if guard.shutdown {
                    return;
                }
                if let Some(job) = guard.pending.take() {
                    break job;
                }
                guard = cv.wait(guard).expect("slot lock");
            }
        };
        let result = engine.submit(&job.source);
        *latest.lock().expect("latest lock") = Some(result.clone());
        let _ = results.send(result.clone());
        let _ = job.reply.send(Ok(result));
    }
}

#[derive(Deserialize)]
struct LanguageQuery {
    language: String,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn submit_error(e: SubmitError) -> Response {
    let status = match e {
        SubmitError::UnknownLanguage(_) => StatusCode::NOT_FOUND,
        SubmitError::Superseded => StatusCode::CONFLICT,
        SubmitError::ShuttingDown => StatusCode::SERVICE_UNAVAILABLE,
    };
    (status, Json(ErrorBody { error: e.to_string() })).into_response()
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/probe", post(probe))
        .route("/backends", get(backends))
        .route("/recordings/latest", get(latest))
        .route("/live", get(live))
        .with_state(service)
}

async fn probe(State(service): State<Arc<Service>>, Json(body): Json<ProbeSubmission>) -> Response {
    match service.submit(&body.language, body.source).await {
        Ok(result) => Json(result).into_response(),
        Err(e) => submit_error(e),
    }
}

async fn backends(State(service): State<Arc<Service>>) -> Json<Vec<BackendInfo>> {
    Json(service.backends())
}

async fn latest(State(service): State<Arc<Service>>, Query(q): Query<LanguageQuery>) -> Response {
    match service.latest(&q.language) {
        Ok(Some(result)) => Json(result).into_response(),
        Ok(None) => (
            StatusCode::NOT_FOUND,
            Json(ErrorBody {
                error: "no recording yet".into(),
            }),
        )
            .into_response(),
        Err(e) => submit_error(e),
    }
}

async fn live(State(service): State<Arc<Service>>, Query(q): Query<LanguageQuery>, ws: WebSocketUpgrade) -> Response {
    match service.subscribe(&q.language) {
        Ok(rx) => ws.on_upgrade(move |socket| push(socket, rx)),
        Err(e) => submit_error(e),
    }
}

async fn push(mut socket: WebSocket, mut rx: broadcast::Receiver<ProbeResult>) {
    loop {
        tokio::select! {
            received = rx.recv() => match received {
                Ok(result) => {
                    let Ok(text) = serde_json::to_string(&result) else { continue };
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => log::warn!("live subscriber skipped {n} results"),
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

/// Serves until the process ends. Returns once the listener is bound and
/// the address is known through `bound`.
pub async fn serve(
    addr: SocketAddr,
    service: Arc<Service>,
    bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    bound(listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
