use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Band, MonitorLevel};
use crate::time::Nanos;

/// Unit tag carried next to every sampled value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Percent,
    BytesPerSec,
    Millis,
    Hertz,
    Seconds,
    Ratio,
    Count,
}

/// One sampled health signal. Immutable once published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub monitor_id: Arc<str>,
    pub entity_id: Arc<str>,
    pub value: f64,
    pub unit: Unit,
    pub level: MonitorLevel,
    pub timestamp: Nanos,
    pub message: String,
}

impl MonitorReport {
    /// Build a report whose level is derived from `band`.
    pub fn classified(
        monitor_id: impl Into<Arc<str>>,
        entity_id: impl Into<Arc<str>>,
        value: f64,
        unit: Unit,
        band: &Band<f64>,
        timestamp: Nanos,
    ) -> Self {
        let level = band.classify(value);
        let message = if !value.is_finite() {
            "non-finite sample".to_owned()
        } else {
            String::new()
        };
        Self {
            monitor_id: monitor_id.into(),
            entity_id: entity_id.into(),
            value,
            unit,
            level,
            timestamp,
            message,
        }
    }

    pub fn with_level(
        monitor_id: impl Into<Arc<str>>,
        entity_id: impl Into<Arc<str>>,
        value: f64,
        unit: Unit,
        level: MonitorLevel,
        timestamp: Nanos,
        message: impl Into<String>,
    ) -> Self {
        Self {
            monitor_id: monitor_id.into(),
            entity_id: entity_id.into(),
            value,
            unit,
            level,
            timestamp,
            message: message.into(),
        }
    }

    /// Copy of this report marked stale at `now`.
    pub fn staled(&self, now: Nanos, message: impl Into<String>) -> Self {
        Self {
            level: MonitorLevel::Stale,
            timestamp: now,
            message: message.into(),
            ..self.clone()
        }
    }
}

/// Encode one report as a newline-terminated UTF-8 record for the status stream.
pub fn encode_report_line(report: &MonitorReport) -> String {
    let mut line = serde_json::to_string(report).expect("report serializes");
    line.push('\n');
    line
}

pub fn decode_report_line(line: &str) -> Result<MonitorReport, serde_json::Error> {
    serde_json::from_str(line.trim_end_matches(['\n', '\r']))
}
