//! JSON-over-HTTP front end with a server-sent event stream per session.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chessvox_core::vocabulary::VocabEntry;
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::service::{CreateProfile, CreateSession, Service, ServiceError};
use crate::session::{EventKind, SessionEvent};

const MAX_BODY: usize = 8 * 1024 * 1024;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        "UNKNOWN_SESSION" | "UNKNOWN_SPEAKER" | "NO_ENROLLMENT" => StatusCode::NOT_FOUND,
        "SESSION_CLOSED" => StatusCode::GONE,
        "INSUFFICIENT_ENROLLMENT" | "NO_PENDING" | "SESSION_COMPLETE" | "DUPLICATE_SPEAKER" => StatusCode::CONFLICT,
        "BAD_AUDIO" | "INVALID_SPEAKER_ID" | "CONFIG_INVALID" => StatusCode::UNPROCESSABLE_ENTITY,
        "EMPTY_MODEL" | "MODEL_UNAVAILABLE" | "CORPUS_ERROR" => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.0.code();
        let body = ErrorBody { error: code.to_string(), message: self.0.to_string() };
        (status_for(code), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs blocking service work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ServiceError::Model(format!("worker failed: {e}"))))
        .map_err(ApiError)
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/vocabulary", get(vocabulary))
        .route("/profiles", post(create_profile).get(list_profiles))
        .route("/profiles/{id}/enrollment/takes", post(submit_take))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/audio", post(submit_audio))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/confirm", post(confirm))
        .route("/sessions/{id}/log", get(event_log))
        .route("/sessions/{id}/events", get(events))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(service)
}

async fn vocabulary(State(svc): State<Arc<Service>>) -> Json<Vec<VocabEntry>> {
    Json(svc.vocabulary().entries().to_vec())
}

async fn create_profile(State(svc): State<Arc<Service>>, Json(req): Json<CreateProfile>) -> Result<impl IntoResponse, ApiError> {
    let summary = blocking(move || svc.create_profile(req)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list_profiles(State(svc): State<Arc<Service>>) -> ApiResult<Vec<crate::service::ProfileSummary>> {
    Ok(Json(svc.list_profiles()?))
}

async fn submit_take(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<crate::service::TakeOutcome> {
    blocking(move || svc.submit_take(&id, &body)).await.map(Json)
}

async fn create_session(State(svc): State<Arc<Service>>, Json(req): Json<CreateSession>) -> Result<impl IntoResponse, ApiError> {
    let snapshot = blocking(move || svc.create_session(req)).await?;
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn delete_session(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<crate::service::SessionSnapshot> {
    Ok(Json(svc.close_session(&id)?))
}

async fn submit_audio(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<crate::service::RecognitionOutcome> {
    blocking(move || svc.submit_audio(&id, &body)).await.map(Json)
}

async fn get_state(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<crate::service::SessionSnapshot> {
    Ok(Json(svc.get_state(&id)?))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConfirmBody {
    pub accept: bool,
}

async fn confirm(State(svc): State<Arc<Service>>, Path(id): Path<String>, Json(body): Json<ConfirmBody>) -> ApiResult<crate::service::ConfirmOutcome> {
    Ok(Json(svc.confirm_pending(&id, body.accept)?))
}

async fn event_log(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Vec<SessionEvent>> {
    Ok(Json(svc.events(&id)?))
}

#[derive(Debug, Default, Deserialize)]
struct EventsQuery {
    /// First sequence number to send; earlier events are skipped.
    #[serde(default)]
    from: u64,
}

fn sse_event(e: &SessionEvent) -> Event {
    let name = serde_json::to_value(&e.kind)
        .ok()
        .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_string))
        .unwrap_or_else(|| "EVENT".into());
    Event::default()
        .id(e.seq.to_string())
        .event(name)
        .json_data(e)
        .expect("session events serialize")
}

fn live_events(rx: broadcast::Receiver<SessionEvent>, after: Option<u64>) -> impl Stream<Item = SessionEvent> {
    stream::unfold((rx, after, false), |(mut rx, after, done)| async move {
        if done {
            return None;
        }
        loop {
            match rx.recv().await {
                Ok(e) if after.is_some_and(|a| e.seq <= a) => continue,
                Ok(e) => {
                    let closed = matches!(e.kind, EventKind::Closed);
                    let seq = Some(e.seq);
                    return Some((e, (rx, seq, closed)));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
}

/// Replays the log from `from`, then follows new events until the session
/// closes.
async fn events(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let (backlog, rx) = svc.subscribe(&id)?;
    let last = backlog.last().map(|e| e.seq);
    let finished = backlog.iter().any(|e| matches!(e.kind, EventKind::Closed));
    let backlog: Vec<SessionEvent> = backlog.into_iter().filter(|e| e.seq >= q.from).collect();
    let live = if finished { None } else { Some(live_events(rx, last)) };
    let stream = stream::iter(backlog)
        .chain(stream::iter(live).flatten())
        .map(|e| Ok(sse_event(&e)));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

/// Binds and serves until Ctrl-C.
pub async fn serve(service: Arc<Service>, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
