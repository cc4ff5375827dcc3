use std::convert::Infallible;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use lta_core::docking::Pose;
use lta_core::metrics::Event;
use lta_core::session::{InterventionSession, SessionAction, SessionError, SessionState};
use lta_core::time::Nanos;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::backend::{SessionBackend, StatusSnapshot};
use crate::notify::Dispatcher;

pub const STREAM_CAPACITY: usize = 1024;

/// Message on the live stream. The SSE event name is [`StreamMessage::name`].
#[derive(Debug, Clone, PartialEq)]
pub enum StreamMessage {
    Status(StatusSnapshot),
    Event(Event),
    Session(SessionSummary),
}

impl StreamMessage {
    pub fn name(&self) -> &'static str {
        match self {
            StreamMessage::Status(_) => "status",
            StreamMessage::Event(_) => "event",
            StreamMessage::Session(_) => "session",
        }
    }

    pub fn data(&self) -> String {
        let json = match self {
            StreamMessage::Status(s) => serde_json::to_string(s),
            StreamMessage::Event(e) => serde_json::to_string(e),
            StreamMessage::Session(s) => serde_json::to_string(s),
        };
        json.expect("stream message serializes")
    }

    fn to_sse(&self) -> SseEvent {
        SseEvent::default().event(self.name()).data(self.data())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: u64,
    pub class: String,
    pub state: SessionState,
    pub created: Nanos,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolver: Option<String>,
    pub actions: usize,
}

impl From<&InterventionSession> for SessionSummary {
    fn from(s: &InterventionSession) -> Self {
        Self {
            id: s.id,
            class: s.class.clone(),
            state: s.state,
            created: s.created,
            url: s.url.clone(),
            resolver: s.resolver.clone(),
            actions: s.transcript.len(),
        }
    }
}

struct Shared<B> {
    backend: Mutex<B>,
    token: Option<String>,
    hub: broadcast::Sender<StreamMessage>,
    notifier: Dispatcher,
}

/// Shared gateway state. One lock serializes all session mutations; delivery of
/// notifications and stream messages happens after it is released.
pub struct Gateway<B> {
    shared: Arc<Shared<B>>,
}

impl<B> Clone for Gateway<B> {
    fn clone(&self) -> Self {
        Self {
            shared: self.shared.clone(),
        }
    }
}

impl<B: SessionBackend> Gateway<B> {
    pub fn new(backend: B, notifier: Dispatcher) -> Self {
        Self::build(backend, notifier, None)
    }

    /// Every request must carry `token`, as a bearer header or a `token` query parameter.
    pub fn with_token(backend: B, notifier: Dispatcher, token: impl Into<String>) -> Self {
        Self::build(backend, notifier, Some(token.into()))
    }

    fn build(backend: B, notifier: Dispatcher, token: Option<String>) -> Self {
        let (hub, _) = broadcast::channel(STREAM_CAPACITY);
        Self {
            shared: Arc::new(Shared {
                backend: Mutex::new(backend),
                token: token.filter(|t| !t.is_empty()),
                hub,
                notifier,
            }),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, B> {
        self.shared
            .backend
            .lock()
            .unwrap_or_else(|e| e.into_inner())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamMessage> {
        self.shared.hub.subscribe()
    }

    pub fn status(&self) -> StatusSnapshot {
        self.lock().status()
    }

    fn broadcast(&self, message: StreamMessage) {
        // No subscribers is fine.
        let _ = self.shared.hub.send(message);
    }

    /// Deliver queued notifications and log records. Returns the records.
    pub fn pump(&self) -> Vec<Event> {
        let (notifications, events) = {
            let mut b = self.lock();
            (b.drain_notifications(), b.drain_events())
        };
        for n in notifications {
            self.shared.notifier.send(n);
        }
        for e in &events {
            self.broadcast(StreamMessage::Event(e.clone()));
        }
        events
    }

    /// Publish the current status on the stream.
    pub fn publish_status(&self) {
        let status = self.status();
        self.broadcast(StreamMessage::Status(status));
    }

    fn act(
        &self,
        id: u64,
        supervisor: &str,
        action: SessionAction,
    ) -> Result<ActionReply, ApiError> {
        if supervisor.trim().is_empty() {
            return Err(ApiError::BadRequest("supervisor id is required".into()));
        }
        let (handled, summary) = {
            let mut b = self.lock();
            let handled = b.act(id, supervisor, action)?;
            let summary = b.session(id).as_ref().map(SessionSummary::from);
            (handled, summary)
        };
        self.pump();
        if let Some(s) = summary {
            self.broadcast(StreamMessage::Session(s));
        }
        Ok(ActionReply {
            session: id,
            state: handled.state,
            action: handled.action,
            notified: handled.notifications.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionReply {
    pub session: u64,
    pub state: SessionState,
    /// The action as applied, after clamping.
    pub action: SessionAction,
    /// All-clear notifications sent.
    pub notified: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRequest {
    pub supervisor: String,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleopRequest {
    pub supervisor: String,
    pub v: f64,
    pub omega: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveRequest {
    pub supervisor: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{0}")]
    BadRequest(String),
    #[error("missing or wrong token")]
    Unauthorized,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::Session(SessionError::NotFound(_)) => StatusCode::NOT_FOUND,
            ApiError::Session(SessionError::Closed { .. } | SessionError::NotResolved(_)) => {
                StatusCode::CONFLICT
            }
            ApiError::Session(SessionError::BadTeleop) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
        };
        (
            status,
            Json(serde_json::json!({ "error": self.to_string() })),
        )
            .into_response()
    }
}

pub fn router<B: SessionBackend>(gateway: Gateway<B>) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions::<B>))
        .route("/sessions/{id}", get(get_session::<B>))
        .route("/sessions/{id}/pose", post(set_pose::<B>))
        .route("/sessions/{id}/teleop", post(teleop::<B>))
        .route("/sessions/{id}/resolve", post(resolve::<B>))
        .route("/status", get(status::<B>))
        .route("/stream", get(stream::<B>))
        .layer(middleware::from_fn_with_state(
            gateway.clone(),
            authorize::<B>,
        ))
        .with_state(gateway)
}

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

async fn authorize<B: SessionBackend>(
    State(g): State<Gateway<B>>,
    Query(query): Query<TokenQuery>,
    request: Request,
    next: Next,
) -> Response {
    if let Some(expected) = &g.shared.token {
        let bearer = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        // EventSource cannot set headers, hence the query parameter.
        let given = bearer.or(query.token.as_deref());
        if given != Some(expected.as_str()) {
            return ApiError::Unauthorized.into_response();
        }
    }
    next.run(request).await
}

async fn list_sessions<B: SessionBackend>(
    State(g): State<Gateway<B>>,
) -> Json<Vec<SessionSummary>> {
    Json(
        g.lock()
            .sessions()
            .iter()
            .map(SessionSummary::from)
            .collect(),
    )
}

async fn get_session<B: SessionBackend>(
    State(g): State<Gateway<B>>,
    Path(id): Path<u64>,
) -> Result<Json<InterventionSession>, ApiError> {
    g.lock()
        .session(id)
        .map(Json)
        .ok_or(ApiError::Session(SessionError::NotFound(id)))
}

async fn set_pose<B: SessionBackend>(
    State(g): State<Gateway<B>>,
    Path(id): Path<u64>,
    Json(req): Json<PoseRequest>,
) -> Result<Json<ActionReply>, ApiError> {
    if !(req.x.is_finite() && req.y.is_finite() && req.theta.is_finite()) {
        return Err(ApiError::BadRequest("pose must be finite".into()));
    }
    let pose = Pose::new(req.x, req.y, req.theta);
    g.act(id, &req.supervisor, SessionAction::SetPose { pose })
        .map(Json)
}

async fn teleop<B: SessionBackend>(
    State(g): State<Gateway<B>>,
    Path(id): Path<u64>,
    Json(req): Json<TeleopRequest>,
) -> Result<Json<ActionReply>, ApiError> {
    let action = SessionAction::Teleop {
        v: req.v,
        omega: req.omega,
        duration_s: req.duration_s,
    };
    g.act(id, &req.supervisor, action).map(Json)
}

async fn resolve<B: SessionBackend>(
    State(g): State<Gateway<B>>,
    Path(id): Path<u64>,
    Json(req): Json<ResolveRequest>,
) -> Result<Json<ActionReply>, ApiError> {
    g.act(id, &req.supervisor, SessionAction::ConfirmFix)
        .map(Json)
}

async fn status<B: SessionBackend>(State(g): State<Gateway<B>>) -> Json<StatusSnapshot> {
    Json(g.status())
}

/// Current status first, then everything published on the hub.
async fn stream<B: SessionBackend>(
    State(g): State<Gateway<B>>,
) -> Sse<impl Stream<Item = Result<SseEvent, Infallible>>> {
    let rx = g.subscribe();
    let first = StreamMessage::Status(g.status()).to_sse();
    let live = stream::unfold(rx, |mut rx| async move {
        match rx.recv().await {
            Ok(m) => Some((m.to_sse(), rx)),
            Err(broadcast::error::RecvError::Lagged(n)) => Some((
                SseEvent::default().comment(format!("skipped {n} messages")),
                rx,
            )),
            Err(broadcast::error::RecvError::Closed) => None,
        }
    });
    Sse::new(stream::once(async move { first }).chain(live).map(Ok))
        .keep_alive(KeepAlive::default())
}
