use serde::{Deserialize, Serialize};

use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProcessState {
    Stopped,
    Starting,
    Running,
    Stopping,
    Failed,
}

impl ProcessState {
    /// STOPPED→STARTING→RUNNING→STOPPING→STOPPED, STARTING→STOPPING, any→FAILED,
    /// and FAILED→STOPPED once a failed entity has been cleaned up.
    pub fn can_transition(self, to: ProcessState) -> bool {
        use ProcessState::*;
        matches!(
            (self, to),
            (Stopped, Starting)
                | (Starting, Running)
                | (Starting, Stopping)
                | (Running, Stopping)
                | (Stopping, Stopped)
                | (Failed, Stopped)
                | (_, Failed)
        ) && self != to
    }

    /// Entities in these states are not expected to heartbeat.
    pub fn excluded_from_liveness(self) -> bool {
        matches!(
            self,
            ProcessState::Stopped | ProcessState::Starting | ProcessState::Stopping
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessState::Stopped => "STOPPED",
            ProcessState::Starting => "STARTING",
            ProcessState::Running => "RUNNING",
            ProcessState::Stopping => "STOPPING",
            ProcessState::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub entity: String,
    pub from: ProcessState,
    pub to: ProcessState,
    pub t: Nanos,
}
