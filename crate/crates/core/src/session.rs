//! Supervisor escalation sessions: who gets notified, what they did, when it ended.
//!
//! [`SessionManager`] is pure bookkeeping. It returns the notifications to send and
//! the events to log; transports and persistence belong to the caller.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::docking::Pose;
use crate::metrics::EventKind;
use crate::monitor::AggregatedStatus;
use crate::time::{secs, Nanos};

pub const DEFAULT_TTL_S: f64 = 15.0 * 60.0;
pub const MAX_TELEOP_SPEED: f64 = 0.5;
pub const MAX_TELEOP_TURN_RATE: f64 = 1.0;
pub const MAX_TELEOP_DURATION_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Pending,
    Active,
    Resolved,
    Expired,
}

impl SessionState {
    pub fn is_open(self) -> bool {
        matches!(self, SessionState::Pending | SessionState::Active)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Pending => "PENDING",
            SessionState::Active => "ACTIVE",
            SessionState::Resolved => "RESOLVED",
            SessionState::Expired => "EXPIRED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supervisor {
    pub id: String,
    /// Webhook URL or any address the notifier understands.
    pub address: String,
}

impl Supervisor {
    pub fn new(id: impl Into<String>, address: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            address: address.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionAction {
    SetPose { pose: Pose<f64> },
    Teleop { v: f64, omega: f64, duration_s: f64 },
    ConfirmFix,
}

impl SessionAction {
    pub fn name(&self) -> &'static str {
        match self {
            SessionAction::SetPose { .. } => "set_pose",
            SessionAction::Teleop { .. } => "teleop",
            SessionAction::ConfirmFix => "confirm_fix",
        }
    }

    /// Teleop commands limited to the safety envelope; other actions unchanged.
    pub fn clamped(self) -> Self {
        match self {
            SessionAction::Teleop {
                v,
                omega,
                duration_s,
            } => SessionAction::Teleop {
                v: clamp_sym(v, MAX_TELEOP_SPEED),
                omega: clamp_sym(omega, MAX_TELEOP_TURN_RATE),
                duration_s: if duration_s.is_finite() {
                    duration_s.clamp(0.0, MAX_TELEOP_DURATION_S)
                } else {
                    0.0
                },
            },
            other => other,
        }
    }

    fn describe(&self) -> String {
        match self {
            SessionAction::SetPose { pose } => {
                format!("x={:.3} y={:.3} theta={:.3}", pose.x, pose.y, pose.theta)
            }
            SessionAction::Teleop {
                v,
                omega,
                duration_s,
            } => {
                format!("v={v:.3} omega={omega:.3} duration={duration_s:.1}s")
            }
            SessionAction::ConfirmFix => String::new(),
        }
    }
}

fn clamp_sym(x: f64, limit: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-limit, limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub t: Nanos,
    pub supervisor: String,
    pub action: SessionAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSession {
    pub id: u64,
    pub class: String,
    pub url: String,
    pub created: Nanos,
    pub state: SessionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolver: Option<String>,
    pub transcript: Vec<TranscriptEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<AggregatedStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotificationKind {
    Request,
    Reminder,
    AllClear,
}

/// Webhook payload. One per roster entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub kind: NotificationKind,
    pub session: u64,
    pub class: String,
    pub url: String,
    pub to: String,
    pub address: String,
}

/// Delivers notifications. Implementations must not block session bookkeeping.
pub trait Notifier {
    fn notify(&mut self, notification: &Notification);
}

/// Keeps what it was asked to send.
#[derive(Debug, Default, Clone)]
pub struct RecordingNotifier {
    pub sent: Vec<Notification>,
}

impl Notifier for RecordingNotifier {
    fn notify(&mut self, notification: &Notification) {
        self.sent.push(notification.clone());
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("no session {0}")]
    NotFound(u64),
    #[error("session {id} is {}", state.as_str())]
    Closed { id: u64, state: SessionState },
    #[error("session {0} is not resolved")]
    NotResolved(u64),
    #[error("teleop needs finite v, omega and duration")]
    BadTeleop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Opened {
    pub session: u64,
    /// False when an open session for the class already existed.
    pub created: bool,
    pub notifications: Vec<Notification>,
    /// Log records for a new session.
    pub events: Vec<EventKind>,
    /// Set when the roster is empty and nobody was told.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handled {
    pub state: SessionState,
    /// The action as applied, after clamping.
    pub action: SessionAction,
    pub notifications: Vec<Notification>,
    pub events: Vec<EventKind>,
    /// Error class whose escalation this closed.
    pub resolved_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expired {
    pub session: u64,
    pub class: String,
    pub notifications: Vec<Notification>,
}

#[derive(Debug, Clone)]
pub struct SessionManager {
    roster: Vec<Supervisor>,
    base_url: String,
    ttl: Nanos,
    sessions: BTreeMap<u64, InterventionSession>,
    next_id: u64,
}

impl SessionManager {
    pub fn new(roster: Vec<Supervisor>, base_url: impl Into<String>) -> Self {
        Self {
            roster,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            ttl: secs(DEFAULT_TTL_S),
            sessions: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn with_ttl(mut self, ttl: Nanos) -> Self {
        assert!(ttl > 0, "session ttl must be positive");
        self.ttl = ttl;
        self
    }

    pub fn roster(&self) -> &[Supervisor] {
        &self.roster
    }

    pub fn ttl(&self) -> Nanos {
        self.ttl
    }

    pub fn get(&self, id: u64) -> Option<&InterventionSession> {
        self.sessions.get(&id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &InterventionSession> {
        self.sessions.values()
    }

    pub fn open_for(&self, class: &str) -> Option<&InterventionSession> {
        self.sessions
            .values()
            .find(|s| s.class == class && s.state.is_open())
    }

    fn notify_all(
        &self,
        kind: NotificationKind,
        s: &InterventionSession,
        skip: Option<&str>,
    ) -> Vec<Notification> {
        self.roster
            .iter()
            .filter(|r| Some(r.id.as_str()) != skip)
            .map(|r| Notification {
                kind,
                session: s.id,
                class: s.class.clone(),
                url: s.url.clone(),
                to: r.id.clone(),
                address: r.address.clone(),
            })
            .collect()
    }

    /// Open a session for `class`, or return the one already open.
    pub fn open_session(
        &mut self,
        class: &str,
        snapshot: Option<AggregatedStatus>,
        pose: Option<Pose<f64>>,
        now: Nanos,
    ) -> Opened {
        if let Some(s) = self.open_for(class) {
            return Opened {
                session: s.id,
                created: false,
                notifications: Vec::new(),
                events: Vec::new(),
                warning: None,
            };
        }
        let id = self.next_id;
        self.next_id += 1;
        let session = InterventionSession {
            id,
            class: class.to_string(),
            url: format!("{}/sessions/{id}", self.base_url),
            created: now,
            state: SessionState::Pending,
            resolver: None,
            transcript: Vec::new(),
            snapshot,
            pose,
        };
        let notifications = self.notify_all(NotificationKind::Request, &session, None);
        let warning = self.roster.is_empty().then(|| {
            let msg =
                format!("supervisor roster is empty; session {id} for `{class}` notified nobody");
            tracing::warn!("{msg}");
            msg
        });
        self.sessions.insert(id, session);
        Opened {
            session: id,
            created: true,
            notifications,
            events: vec![EventKind::SupervisorRequest {
                session: id,
                class: class.to_string(),
            }],
            warning,
        }
    }

    pub fn handle_action(
        &mut self,
        id: u64,
        supervisor: &str,
        action: SessionAction,
        now: Nanos,
    ) -> Result<Handled, SessionError> {
        if let SessionAction::Teleop {
            v,
            omega,
            duration_s,
        } = action
        {
            if !(v.is_finite() && omega.is_finite() && duration_s.is_finite()) {
                return Err(SessionError::BadTeleop);
            }
        }
        let session = self
            .sessions
            .get_mut(&id)
            .ok_or(SessionError::NotFound(id))?;
        if !session.state.is_open() {
            return Err(SessionError::Closed {
                id,
                state: session.state,
            });
        }
        let action = action.clamped();
        session.transcript.push(TranscriptEntry {
            t: now,
            supervisor: supervisor.to_string(),
            action,
        });
        let mut events = vec![EventKind::ManualIntervention {
            requested: true,
            session: Some(id),
            supervisor: Some(supervisor.to_string()),
            action: action.name().to_string(),
            note: action.describe(),
        }];
        let mut resolved_class = None;
        match action {
            SessionAction::ConfirmFix => {
                session.state = SessionState::Resolved;
                session.resolver = Some(supervisor.to_string());
                resolved_class = Some(session.class.clone());
                events.push(EventKind::SupervisorResolution {
                    session: id,
                    supervisor: supervisor.to_string(),
                    state: SessionState::Resolved.as_str().to_string(),
                });
            }
            _ => session.state = SessionState::Active,
        }
        let state = session.state;
        let notifications = if state == SessionState::Resolved {
            self.broadcast_all_clear(id)?
        } else {
            Vec::new()
        };
        Ok(Handled {
            state,
            action,
            notifications,
            events,
            resolved_class,
        })
    }

    /// All-clear to every roster entry except the resolver.
    pub fn broadcast_all_clear(&self, id: u64) -> Result<Vec<Notification>, SessionError> {
        let s = self.sessions.get(&id).ok_or(SessionError::NotFound(id))?;
        if s.state != SessionState::Resolved {
            return Err(SessionError::NotResolved(id));
        }
        Ok(self.notify_all(NotificationKind::AllClear, s, s.resolver.as_deref()))
    }

    /// PENDING sessions older than the TTL expire and are re-notified once.
    pub fn expire_sessions(&mut self, now: Nanos) -> Vec<Expired> {
        let ttl = self.ttl;
        let ids: Vec<u64> = self
            .sessions
            .values()
            .filter(|s| s.state == SessionState::Pending && now.saturating_sub(s.created) > ttl)
            .map(|s| s.id)
            .collect();
        ids.into_iter()
            .map(|id| {
                let s = self.sessions.get_mut(&id).expect("listed");
                s.state = SessionState::Expired;
                let s = &self.sessions[&id];
                Expired {
                    session: id,
                    class: s.class.clone(),
                    notifications: self.notify_all(NotificationKind::Reminder, s, None),
                }
            })
            .collect()
    }
}
