//! Escalation endpoint: intervention sessions over HTTP, webhook notifications
//! to supervisors and a server-sent event stream of live status.
//!
//! | route                        | |
//! |------------------------------|---|
//! | `GET /sessions`              | summaries of all sessions |
//! | `GET /sessions/{id}`         | full session with snapshot and transcript |
//! | `POST /sessions/{id}/pose`   | `{supervisor, x, y, theta}` localization reset |
//! | `POST /sessions/{id}/teleop` | `{supervisor, v, omega, duration_s}`, clamped |
//! | `POST /sessions/{id}/resolve`| `{supervisor}` confirms the fix |
//! | `GET /status`                | current [`StatusSnapshot`] |
//! | `GET /stream`                | SSE: `status`, `event` and `session` messages |

mod backend;
pub mod daemon;
mod notify;
mod routes;

use std::future::Future;

pub use backend::{ManagerBackend, MonitorView, SessionBackend, SimBackend, StatusSnapshot};
pub use notify::{Dispatcher, WebhookPayload, WEBHOOK_TIMEOUT};
pub use routes::{
    router, ActionReply, ApiError, Gateway, PoseRequest, ResolveRequest, SessionSummary,
    StreamMessage, TeleopRequest, STREAM_CAPACITY,
};

/// Serve the gateway until `shutdown` resolves.
pub async fn serve<B: SessionBackend>(
    listener: tokio::net::TcpListener,
    gateway: Gateway<B>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(shutdown)
        .await
}
