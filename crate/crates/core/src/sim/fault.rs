//! Scripted faults.

use serde::{Deserialize, Serialize};

/// Which recovery ends a localization fault. Stronger fixes also work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LocalizationFix {
    #[default]
    Rotate,
    Restart,
    Supervisor,
}

/// Which recovery clears a navigation block. Stronger fixes also work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NavigationFix {
    #[default]
    Wait,
    MoveBack,
    Supervisor,
}

fn default_crash_after() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    /// The entity's process dies once.
    ProcessCrash { target: String },
    /// The channel publishes at `factor` times its nominal rate.
    RateDegrade { target: String, factor: f64 },
    /// The clock drifts by `offset_ms` relative to the peer until resynchronised.
    ClockDrift { offset_ms: f64 },
    /// Localization confidence collapses until `fixed_by` (or a stronger recovery) runs.
    LocalizationLoss {
        #[serde(default)]
        fixed_by: LocalizationFix,
    },
    /// The way ahead is blocked until `fixed_by` (or a stronger recovery) runs.
    NavigationBlock {
        #[serde(default)]
        fixed_by: NavigationFix,
    },
    /// The entity dies `crash_after_s` after every start; only a person can fix it.
    DeadlockRestartLoop {
        target: String,
        #[serde(default = "default_crash_after")]
        crash_after_s: f64,
    },
    /// The next docking attempt suffers wheel slip.
    DockingSlip {
        #[serde(default = "default_bias")]
        angular_bias: f64,
        #[serde(default = "default_scale")]
        linear_scale: f64,
    },
    /// The station stops signalling charge contact until someone resets it.
    DockSignalLoss,
}

fn default_bias() -> f64 {
    0.15
}

fn default_scale() -> f64 {
    0.9
}

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::ProcessCrash { .. } => "process_crash",
            FaultKind::RateDegrade { .. } => "rate_degrade",
            FaultKind::ClockDrift { .. } => "clock_drift",
            FaultKind::LocalizationLoss { .. } => "localization_loss",
            FaultKind::NavigationBlock { .. } => "navigation_block",
            FaultKind::DeadlockRestartLoop { .. } => "deadlock_restart_loop",
            FaultKind::DockingSlip { .. } => "docking_slip",
            FaultKind::DockSignalLoss => "dock_signal_loss",
        }
    }
}

/// A fault starting at `at_s` (seconds from midnight of day 0). Without a
/// duration it lasts until a recovery or a person clears it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fault {
    pub at_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(flatten)]
    pub kind: FaultKind,
}

impl Fault {
    pub fn new(at_s: f64, kind: FaultKind) -> Self {
        Self {
            at_s,
            duration_s: None,
            kind,
        }
    }

    pub fn lasting(mut self, duration_s: f64) -> Self {
        self.duration_s = Some(duration_s);
        self
    }
}
