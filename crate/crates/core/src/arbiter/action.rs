use std::fmt;

use serde::{Deserialize, Serialize};

/// Recovery behaviours the arbiter can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryKind {
    RestartNode,
    Wait,
    MoveBack,
    RotateSlow,
    RestartLocalization,
    RequestSupervisor,
    ResyncClock,
    SwitchConfiguration,
}

impl RecoveryKind {
    pub const ALL: [RecoveryKind; 8] = [
        RecoveryKind::RestartNode,
        RecoveryKind::Wait,
        RecoveryKind::MoveBack,
        RecoveryKind::RotateSlow,
        RecoveryKind::RestartLocalization,
        RecoveryKind::RequestSupervisor,
        RecoveryKind::ResyncClock,
        RecoveryKind::SwitchConfiguration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecoveryKind::RestartNode => "restart_node",
            RecoveryKind::Wait => "wait",
            RecoveryKind::MoveBack => "move_back",
            RecoveryKind::RotateSlow => "rotate_slow",
            RecoveryKind::RestartLocalization => "restart_localization",
            RecoveryKind::RequestSupervisor => "request_supervisor",
            RecoveryKind::ResyncClock => "resync_clock",
            RecoveryKind::SwitchConfiguration => "switch_configuration",
        }
    }
}

impl fmt::Display for RecoveryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_BUDGET: u32 = 2;
pub const DEFAULT_COOLDOWN_S: f64 = 10.0;

fn default_budget() -> u32 {
    DEFAULT_BUDGET
}

fn default_cooldown() -> f64 {
    DEFAULT_COOLDOWN_S
}

/// A recovery with its parameters, per-episode attempt budget and cooldown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryAction {
    pub action: RecoveryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_config: Option<String>,
    #[serde(default = "default_budget")]
    pub budget: u32,
    #[serde(default = "default_cooldown")]
    pub cooldown_s: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActionError {
    #[error("{action}: parameter `{param}` must be positive")]
    NonPositive {
        action: RecoveryKind,
        param: &'static str,
    },
    #[error("{action}: missing parameter `{param}`")]
    Missing {
        action: RecoveryKind,
        param: &'static str,
    },
}

impl RecoveryAction {
    pub fn new(action: RecoveryKind) -> Self {
        Self {
            action,
            duration_s: None,
            distance_m: None,
            angular_rate: None,
            target_config: None,
            budget: DEFAULT_BUDGET,
            cooldown_s: DEFAULT_COOLDOWN_S,
        }
    }

    pub fn wait(duration_s: f64) -> Self {
        Self {
            duration_s: Some(duration_s),
            ..Self::new(RecoveryKind::Wait)
        }
    }

    pub fn move_back(distance_m: f64) -> Self {
        Self {
            distance_m: Some(distance_m),
            ..Self::new(RecoveryKind::MoveBack)
        }
    }

    pub fn rotate_slow(angular_rate: f64, duration_s: f64) -> Self {
        Self {
            angular_rate: Some(angular_rate),
            duration_s: Some(duration_s),
            ..Self::new(RecoveryKind::RotateSlow)
        }
    }

    pub fn switch_configuration(target: impl Into<String>) -> Self {
        Self {
            target_config: Some(target.into()),
            ..Self::new(RecoveryKind::SwitchConfiguration)
        }
    }

    pub fn with_budget(mut self, budget: u32) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_cooldown(mut self, cooldown_s: f64) -> Self {
        self.cooldown_s = cooldown_s;
        self
    }

    pub fn validate(&self) -> Result<(), ActionError> {
        let positive = |v: Option<f64>, param| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ActionError::NonPositive {
                action: self.action,
                param,
            }),
            _ => Ok(()),
        };
        positive(self.duration_s, "duration_s")?;
        positive(self.distance_m, "distance_m")?;
        positive(self.angular_rate.map(f64::abs), "angular_rate")?;
        if !(self.cooldown_s >= 0.0 && self.cooldown_s.is_finite()) {
            return Err(ActionError::NonPositive {
                action: self.action,
                param: "cooldown_s",
            });
        }
        if self.budget == 0 {
            return Err(ActionError::NonPositive {
                action: self.action,
                param: "budget",
            });
        }
        if self.action == RecoveryKind::SwitchConfiguration && self.target_config.is_none() {
            return Err(ActionError::Missing {
                action: self.action,
                param: "target_config",
            });
        }
        Ok(())
    }
}
