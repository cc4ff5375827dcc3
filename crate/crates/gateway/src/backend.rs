//! Owners of intervention sessions the gateway can front.

use lta_core::docking::Pose;
use lta_core::metrics::{Event, EventStore, FileStore, RobotMode};
use lta_core::monitor::{AggregatedStatus, MonitorLevel, Unit};
use lta_core::session::{
    Handled, InterventionSession, Notification, SessionAction, SessionError, SessionManager,
};
use lta_core::sim::Simulator;
use lta_core::time::Nanos;
use serde::{Deserialize, Serialize};

/// What the gateway needs from whoever owns the sessions.
///
/// Implementations queue the notifications and log records their mutations
/// produce; the gateway drains and delivers them after releasing its lock.
pub trait SessionBackend: Send + 'static {
    fn sessions(&self) -> Vec<InterventionSession>;
    fn session(&self, id: u64) -> Option<InterventionSession>;
    fn act(
        &mut self,
        id: u64,
        supervisor: &str,
        action: SessionAction,
    ) -> Result<Handled, SessionError>;
    fn drain_notifications(&mut self) -> Vec<Notification>;
    fn drain_events(&mut self) -> Vec<Event>;
    fn status(&self) -> StatusSnapshot;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorView {
    pub id: String,
    pub entity: String,
    pub level: MonitorLevel,
    pub value: f64,
    pub unit: Unit,
    pub message: String,
}

/// Live status as served on `/status` and `/stream`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSnapshot {
    pub t: Nanos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RobotMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose<f64>>,
    pub worst: MonitorLevel,
    pub monitors: Vec<MonitorView>,
    pub open_sessions: Vec<u64>,
}

impl StatusSnapshot {
    pub fn from_status(
        t: Nanos,
        status: Option<&AggregatedStatus>,
        open_sessions: Vec<u64>,
    ) -> Self {
        let monitors = status
            .map(|s| {
                s.entries
                    .values()
                    .map(|r| MonitorView {
                        id: r.monitor_id.to_string(),
                        entity: r.entity_id.to_string(),
                        level: r.level,
                        value: if r.value.is_finite() { r.value } else { 0.0 },
                        unit: r.unit,
                        message: r.message.clone(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            t,
            mode: None,
            battery: None,
            pose: None,
            worst: status.map(|s| s.worst()).unwrap_or_default(),
            monitors,
            open_sessions,
        }
    }
}

fn open_ids<'a>(sessions: impl Iterator<Item = &'a InterventionSession>) -> Vec<u64> {
    sessions
        .filter(|s| s.state.is_open())
        .map(|s| s.id)
        .collect()
}

/// Bare session bookkeeping for a stack that runs elsewhere. The owner opens
/// sessions and feeds status; the clock stamps remote actions.
pub struct ManagerBackend {
    manager: SessionManager,
    clock: Box<dyn Fn() -> Nanos + Send>,
    status: Option<AggregatedStatus>,
    notifications: Vec<Notification>,
    events: Vec<Event>,
}

impl ManagerBackend {
    pub fn new(manager: SessionManager, clock: impl Fn() -> Nanos + Send + 'static) -> Self {
        Self {
            manager,
            clock: Box::new(clock),
            status: None,
            notifications: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn manager(&self) -> &SessionManager {
        &self.manager
    }

    /// Open (or join) the session for `class`. Returns its id.
    pub fn open(&mut self, class: &str, pose: Option<Pose<f64>>) -> u64 {
        let now = (self.clock)();
        let opened = self
            .manager
            .open_session(class, self.status.clone(), pose, now);
        self.notifications.extend(opened.notifications);
        self.events
            .extend(opened.events.into_iter().map(|k| Event::new(now, k)));
        opened.session
    }

    /// Expire stale PENDING sessions; reminders are queued.
    pub fn expire(&mut self) -> Vec<u64> {
        let now = (self.clock)();
        self.manager
            .expire_sessions(now)
            .into_iter()
            .map(|e| {
                self.notifications.extend(e.notifications);
                e.session
            })
            .collect()
    }

    pub fn set_status(&mut self, status: AggregatedStatus) {
        self.status = Some(status);
    }
}

impl SessionBackend for ManagerBackend {
    fn sessions(&self) -> Vec<InterventionSession> {
        self.manager.sessions().cloned().collect()
    }

    fn session(&self, id: u64) -> Option<InterventionSession> {
        self.manager.get(id).cloned()
    }

    fn act(
        &mut self,
        id: u64,
        supervisor: &str,
        action: SessionAction,
    ) -> Result<Handled, SessionError> {
        let now = (self.clock)();
        let handled = self.manager.handle_action(id, supervisor, action, now)?;
        self.notifications
            .extend(handled.notifications.iter().cloned());
        self.events
            .extend(handled.events.iter().cloned().map(|k| Event::new(now, k)));
        Ok(handled)
    }

    fn drain_notifications(&mut self) -> Vec<Notification> {
        std::mem::take(&mut self.notifications)
    }

    fn drain_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    fn status(&self) -> StatusSnapshot {
        let t = self
            .status
            .as_ref()
            .map(|s| s.timestamp)
            .unwrap_or_else(|| (self.clock)());
        StatusSnapshot::from_status(t, self.status.as_ref(), open_ids(self.manager.sessions()))
    }
}

/// A simulated robot whose escalations are handled through the gateway.
/// Drained events are also appended to the store, if any.
#[derive(Debug)]
pub struct SimBackend {
    sim: Simulator,
    cursor: usize,
    store: Option<FileStore>,
}

impl SimBackend {
    pub fn new(sim: Simulator, store: Option<FileStore>) -> Self {
        Self {
            sim,
            cursor: 0,
            store,
        }
    }

    pub fn sim(&self) -> &Simulator {
        &self.sim
    }

    pub fn sim_mut(&mut self) -> &mut Simulator {
        &mut self.sim
    }

    pub fn store(&self) -> Option<&FileStore> {
        self.store.as_ref()
    }

    pub fn flush_store(&mut self) -> Result<(), lta_core::metrics::StoreError> {
        match &mut self.store {
            Some(store) => store.flush(),
            None => Ok(()),
        }
    }
}

impl SessionBackend for SimBackend {
    fn sessions(&self) -> Vec<InterventionSession> {
        self.sim.stack().sessions.sessions().cloned().collect()
    }

    fn session(&self, id: u64) -> Option<InterventionSession> {
        self.sim.stack().sessions.get(id).cloned()
    }

    fn act(
        &mut self,
        id: u64,
        supervisor: &str,
        action: SessionAction,
    ) -> Result<Handled, SessionError> {
        self.sim.supervisor_action(id, supervisor, action)
    }

    fn drain_notifications(&mut self) -> Vec<Notification> {
        self.sim.drain_notifications()
    }

    fn drain_events(&mut self) -> Vec<Event> {
        let events = self.sim.log().events()[self.cursor..].to_vec();
        self.cursor += events.len();
        if let Some(store) = &mut self.store {
            for e in &events {
                if let Err(err) = store.append("sim", e.clone()) {
                    tracing::error!(error = %err, "event store append failed");
                }
            }
        }
        events
    }

    fn status(&self) -> StatusSnapshot {
        let robot = self.sim.robot();
        let mut snapshot = StatusSnapshot::from_status(
            self.sim.now(),
            self.sim.status(),
            open_ids(self.sim.stack().sessions.sessions()),
        );
        snapshot.mode = Some(robot.mode);
        snapshot.battery = Some(robot.battery);
        snapshot.pose = Some(robot.pose);
        snapshot
    }
}
