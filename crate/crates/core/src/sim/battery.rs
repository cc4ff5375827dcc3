//! Linear battery model: constant drain per activity, constant charge rate.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryModel {
    /// Hours from full to empty while driving.
    pub motion_endurance_h: f64,
    /// Hours from full to empty while powered but standing still.
    pub idle_endurance_h: f64,
    /// Hours to charge from the dock threshold to full.
    pub charge_h: f64,
    /// Return to the dock below this fraction.
    pub dock_threshold: f64,
    /// Leave the dock at or above this fraction.
    pub resume_level: f64,
    pub initial: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            motion_endurance_h: 4.5,
            idle_endurance_h: 12.0,
            charge_h: 2.0,
            dock_threshold: 0.15,
            resume_level: 1.0,
            initial: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Moving,
    Idle,
    Charging,
    Off,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("battery model: {0}")]
pub struct BatteryError(pub &'static str);

impl BatteryModel {
    pub fn validate(&self) -> Result<(), BatteryError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.motion_endurance_h) || !pos(self.idle_endurance_h) || !pos(self.charge_h) {
            return Err(BatteryError("endurance and charge times must be positive"));
        }
        if !(0.0..1.0).contains(&self.dock_threshold) {
            return Err(BatteryError("dock threshold must lie in [0, 1)"));
        }
        if !(self.resume_level > self.dock_threshold && self.resume_level <= 1.0) {
            return Err(BatteryError("resume level must lie in (dock threshold, 1]"));
        }
        if !(0.0..=1.0).contains(&self.initial) {
            return Err(BatteryError("initial charge must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Signed change of charge per second.
    pub fn rate(&self, activity: Activity) -> f64 {
        match activity {
            Activity::Moving => -1.0 / (self.motion_endurance_h * 3600.0),
            Activity::Idle => -1.0 / (self.idle_endurance_h * 3600.0),
            Activity::Charging => (1.0 - self.dock_threshold) / (self.charge_h * 3600.0),
            Activity::Off => 0.0,
        }
    }

    pub fn step(&self, level: f64, activity: Activity, dt_s: f64) -> f64 {
        (level + self.rate(activity) * dt_s).clamp(0.0, 1.0)
    }

    /// Hours of driving from `level` down to the dock threshold.
    pub fn motion_hours_to_threshold(&self, level: f64) -> f64 {
        ((level - self.dock_threshold) * self.motion_endurance_h).max(0.0)
    }
}
