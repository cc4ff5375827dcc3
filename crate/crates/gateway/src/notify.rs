//! Notification delivery. Sending never blocks session bookkeeping: notifications
//! go through an unbounded channel to a background task.

use std::time::Duration;

use lta_core::session::{Notification, NotificationKind, Notifier};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

pub const WEBHOOK_TIMEOUT: Duration = Duration::from_secs(5);

/// Body POSTed to a supervisor's webhook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebhookPayload {
    pub kind: NotificationKind,
    pub session: u64,
    pub class: String,
    /// Where the session can be inspected and acted on.
    pub url: String,
    /// Supervisor id this copy is addressed to.
    pub to: String,
    /// One-line message for chat-style receivers.
    pub text: String,
}

impl From<&Notification> for WebhookPayload {
    fn from(n: &Notification) -> Self {
        let text = match n.kind {
            NotificationKind::Request => format!("Robot needs help with `{}`: {}", n.class, n.url),
            NotificationKind::Reminder => {
                format!(
                    "Still waiting for help with `{}` (session {} expired): {}",
                    n.class, n.session, n.url
                )
            }
            NotificationKind::AllClear => format!(
                "All clear: `{}` was resolved (session {})",
                n.class, n.session
            ),
        };
        Self {
            kind: n.kind,
            session: n.session,
            class: n.class.clone(),
            url: n.url.clone(),
            to: n.to.clone(),
            text,
        }
    }
}

/// Handle for queueing notifications.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    tx: mpsc::UnboundedSender<Notification>,
}

impl Dispatcher {
    /// Hand notifications to the caller instead of delivering them.
    pub fn channel() -> (Self, mpsc::UnboundedReceiver<Notification>) {
        let (tx, rx) = mpsc::unbounded_channel();
        (Self { tx }, rx)
    }

    /// [`Dispatcher::webhook`] with a default client.
    pub fn webhooks() -> Self {
        Self::webhook(reqwest::Client::new())
    }

    /// Log every notification and POST it to `http(s)` addresses.
    /// Must be called inside a tokio runtime.
    pub fn webhook(client: reqwest::Client) -> Self {
        let (dispatcher, mut rx) = Self::channel();
        tokio::spawn(async move {
            while let Some(n) = rx.recv().await {
                let payload = WebhookPayload::from(&n);
                tracing::info!(to = %n.to, kind = ?n.kind, session = n.session, "{}", payload.text);
                if !(n.address.starts_with("http://") || n.address.starts_with("https://")) {
                    continue;
                }
                let client = client.clone();
                tokio::spawn(async move {
                    let sent = client
                        .post(&n.address)
                        .timeout(WEBHOOK_TIMEOUT)
                        .json(&payload)
                        .send()
                        .await
                        .and_then(|r| r.error_for_status());
                    if let Err(e) = sent {
                        tracing::warn!(to = %n.to, address = %n.address, error = %e, "webhook delivery failed");
                    }
                });
            }
        });
        dispatcher
    }

    pub fn send(&self, notification: Notification) {
        if self.tx.send(notification).is_err() {
            tracing::warn!("notification transport is gone; dropping notification");
        }
    }
}

impl Notifier for Dispatcher {
    fn notify(&mut self, notification: &Notification) {
        self.send(notification.clone());
    }
}
