//! Event records. One JSON object per line, tagged by `kind`.

use serde::{Deserialize, Serialize};

use crate::arbiter::{ErrorCategory, RecoveryKind};
use crate::docking::Pose;
use crate::monitor::{MonitorLevel, Unit};
use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RobotMode {
    Patrol,
    Docking,
    Charging,
    Recovering,
    Error,
    Off,
}

impl RobotMode {
    pub fn is_undocked(self) -> bool {
        !matches!(self, RobotMode::Charging | RobotMode::Off)
    }

    pub fn is_on(self) -> bool {
        self != RobotMode::Off
    }

    /// Modes whose commanded motion counts as service motion.
    pub fn counts_motion(self) -> bool {
        matches!(self, RobotMode::Patrol | RobotMode::Docking)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RobotMode::Patrol => "PATROL",
            RobotMode::Docking => "DOCKING",
            RobotMode::Charging => "CHARGING",
            RobotMode::Recovering => "RECOVERING",
            RobotMode::Error => "ERROR",
            RobotMode::Off => "OFF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionOutcome {
    Completed,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    MonitorReport {
        monitor_id: String,
        entity_id: String,
        value: f64,
        unit: Unit,
        level: MonitorLevel,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        message: String,
    },
    ActionDispatch {
        class: String,
        category: ErrorCategory,
        action: RecoveryKind,
        episode: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pose: Option<Pose<f64>>,
    },
    ActionResult {
        class: String,
        action: RecoveryKind,
        outcome: ActionOutcome,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        detail: String,
    },
    ModeChange {
        from: RobotMode,
        to: RobotMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pose: Option<Pose<f64>>,
    },
    DockingAttempt {
        success: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position_error_m: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading_error_rad: Option<f64>,
    },
    SupervisorRequest {
        session: u64,
        class: String,
    },
    SupervisorResolution {
        session: u64,
        supervisor: String,
        state: String,
    },
    ManualIntervention {
        requested: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        supervisor: Option<String>,
        action: String,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        note: String,
    },
    /// Distance covered over `[t - moving_s, t]` with nonzero commanded speed throughout.
    OdometryDelta {
        distance_m: f64,
        moving_s: f64,
    },
    DetectionCount {
        count: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    ConfigSwitch {
        from: String,
        to: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::MonitorReport { .. } => "monitor_report",
            EventKind::ActionDispatch { .. } => "action_dispatch",
            EventKind::ActionResult { .. } => "action_result",
            EventKind::ModeChange { .. } => "mode_change",
            EventKind::DockingAttempt { .. } => "docking_attempt",
            EventKind::SupervisorRequest { .. } => "supervisor_request",
            EventKind::SupervisorResolution { .. } => "supervisor_resolution",
            EventKind::ManualIntervention { .. } => "manual_intervention",
            EventKind::OdometryDelta { .. } => "odometry_delta",
            EventKind::DetectionCount { .. } => "detection_count",
            EventKind::ConfigSwitch { .. } => "config_switch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: Nanos,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn new(t: Nanos, kind: EventKind) -> Self {
        Self { t, kind }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("event serializes");
        s.push('\n');
        s
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end_matches(['\n', '\r']))
    }
}

/// Round to 6 decimals so logged values do not depend on last-bit libm differences.
pub fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn round_pose(p: Pose<f64>) -> Pose<f64> {
    Pose {
        x: round6(p.x),
        y: round6(p.y),
        theta: round6(p.theta),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: timestamp {t} precedes {prev}")]
    OutOfOrder { line: usize, t: Nanos, prev: Nanos },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A closed, time-ordered event log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics if `event` is older than the last one; producers own ordering.
    pub fn push(&mut self, event: Event) {
        if let Some(last) = self.events.last() {
            assert!(
                event.t >= last.t,
                "event log must be time ordered ({} < {})",
                event.t,
                last.t
            );
        }
        self.events.push(event);
    }

    pub fn from_events(events: Vec<Event>) -> Result<Self, LogError> {
        for (i, w) in events.windows(2).enumerate() {
            if w[1].t < w[0].t {
                return Err(LogError::OutOfOrder {
                    line: i + 2,
                    t: w[1].t,
                    prev: w[0].t,
                });
            }
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn start(&self) -> Option<Nanos> {
        self.events.first().map(|e| e.t)
    }

    pub fn end(&self) -> Option<Nanos> {
        self.events.last().map(|e| e.t)
    }

    pub fn to_jsonl(&self) -> String {
        self.events.iter().map(Event::to_line).collect()
    }

    pub fn write_to(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        for e in &self.events {
            w.write_all(e.to_line().as_bytes())?;
        }
        Ok(())
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LogError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e = Event::from_line(line).map_err(|source| LogError::Parse {
                line: i + 1,
                source,
            })?;
            if let Some(prev) = events.last().map(|p: &Event| p.t) {
                if e.t < prev {
                    return Err(LogError::OutOfOrder {
                        line: i + 1,
                        t: e.t,
                        prev,
                    });
                }
            }
            events.push(e);
        }
        Ok(Self { events })
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self, LogError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format_is_flat_and_tagged() {
        let e = Event::new(
            5,
            EventKind::ManualIntervention {
                requested: false,
                session: None,
                supervisor: Some("alice".into()),
                action: "ssh_fix".into(),
                note: String::new(),
            },
        );
        assert_eq!(
            e.to_line(),
            "{\"t\":5,\"kind\":\"manual_intervention\",\"requested\":false,\"supervisor\":\"alice\",\"action\":\"ssh_fix\"}\n"
        );
        assert_eq!(Event::from_line(&e.to_line()).unwrap(), e);
    }

    #[test]
    fn out_of_order_log_rejected_with_line() {
        let text = format!(
            "{}{}",
            Event::new(
                10,
                EventKind::DetectionCount {
                    count: 1,
                    label: None
                }
            )
            .to_line(),
            Event::new(
                9,
                EventKind::DetectionCount {
                    count: 1,
                    label: None
                }
            )
            .to_line()
        );
        assert!(matches!(
            EventLog::from_jsonl(&text),
            Err(LogError::OutOfOrder { line: 2, .. })
        ));
    }

    #[test]
    fn rounding_is_stable() {
        assert_eq!(round6(0.1 + 0.2), 0.3);
        assert_eq!(round6(-1e-9), 0.0);
        assert!(round6(-1e-9).is_sign_positive());
    }
}
