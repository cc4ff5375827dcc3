use std::fmt;

use serde::{Deserialize, Serialize};

/// Health level of a single monitor. Ordered by severity; aggregation takes the maximum.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum MonitorLevel {
    #[default]
    Ok,
    Warn,
    Error,
    /// The monitor itself stopped reporting.
    Stale,
}

impl MonitorLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            MonitorLevel::Ok => "OK",
            MonitorLevel::Warn => "WARN",
            MonitorLevel::Error => "ERROR",
            MonitorLevel::Stale => "STALE",
        }
    }
}

impl fmt::Display for MonitorLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
