use serde::{Deserialize, Serialize};

use super::Band;
use crate::time::{secs, Nanos};

/// What a declared monitor samples, with its thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonitorKind {
    /// CPU load in percent.
    Cpu { band: Band<f64> },
    /// RAM usage in percent.
    Ram { band: Band<f64> },
    /// Network throughput in bytes/s.
    Network { band: Band<f64> },
    /// Clock offset to a peer host in ms.
    ClockSkew { peer: String, band: Band<f64> },
    /// Heartbeat liveness of an entity; error-only.
    Liveness { timeout_s: f64 },
    /// Publish rate of a channel in Hz, measured over `window_s`.
    Rate {
        channel: String,
        nominal_hz: f64,
        window_s: f64,
        band: Band<f64>,
    },
    /// Localization confidence in `[0, 1]` (valid loop closure).
    Localization { band: Band<f64> },
    /// Navigation error indicator (0 nominal, 1 navigation failing).
    Navigation { band: Band<f64> },
}

impl MonitorKind {
    pub fn band(&self) -> Option<&Band<f64>> {
        match self {
            MonitorKind::Cpu { band }
            | MonitorKind::Ram { band }
            | MonitorKind::Network { band }
            | MonitorKind::ClockSkew { band, .. }
            | MonitorKind::Rate { band, .. }
            | MonitorKind::Localization { band }
            | MonitorKind::Navigation { band } => Some(band),
            MonitorKind::Liveness { .. } => None,
        }
    }

    /// Default sampling period in seconds for this kind of monitor.
    pub fn default_period_s(&self) -> f64 {
        match self {
            MonitorKind::Cpu { .. } | MonitorKind::Ram { .. } | MonitorKind::Network { .. } => 1.0,
            MonitorKind::Liveness { .. } => 1.0,
            MonitorKind::Rate { .. } => 5.0,
            MonitorKind::ClockSkew { .. } => 30.0,
            MonitorKind::Localization { .. } | MonitorKind::Navigation { .. } => 1.0,
        }
    }
}

/// A monitor declared by a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSpec {
    pub id: String,
    pub entity: String,
    #[serde(flatten)]
    pub kind: MonitorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_s: Option<f64>,
}

impl MonitorSpec {
    pub fn new(id: impl Into<String>, entity: impl Into<String>, kind: MonitorKind) -> Self {
        Self {
            id: id.into(),
            entity: entity.into(),
            kind,
            period_s: None,
        }
    }

    pub fn period(&self) -> Nanos {
        secs(
            self.period_s
                .unwrap_or_else(|| self.kind.default_period_s()),
        )
    }

    /// Liveness monitor id for an entity.
    pub fn liveness_id(entity: &str) -> String {
        format!("liveness:{entity}")
    }

    /// Rate monitor id for a channel.
    pub fn rate_id(channel: &str) -> String {
        format!("rate:{channel}")
    }
}
