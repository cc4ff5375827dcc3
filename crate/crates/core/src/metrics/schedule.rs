//! Duty windows: the hours the robot is expected to be in service.

use serde::{Deserialize, Serialize};

use crate::time::{Nanos, NANOS_PER_DAY, NANOS_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn plus_days(self, days: u64) -> Weekday {
        Weekday::ALL[(self.index() + (days % 7) as usize) % 7]
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScheduleError {
    #[error("duty window must satisfy 0 <= start < end <= 24 (got {start}..{end})")]
    Window { start: f64, end: f64 },
    #[error("no duty days selected")]
    NoDays,
    #[error("{0}")]
    Parse(String),
}

/// Daily window `[start_hour, end_hour)` on the listed weekdays.
/// Day 0 of the log (t = 0 at midnight) falls on `first_day`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DutySchedule {
    #[serde(default = "default_start")]
    pub start_hour: f64,
    #[serde(default = "default_end")]
    pub end_hour: f64,
    #[serde(default = "default_days")]
    pub days: Vec<Weekday>,
    #[serde(default = "default_first_day")]
    pub first_day: Weekday,
    /// Day indices (from day 0) without duty, e.g. public holidays.
    #[serde(default)]
    pub excluded_days: Vec<u64>,
}

fn default_start() -> f64 {
    9.0
}

fn default_end() -> f64 {
    17.0
}

fn default_days() -> Vec<Weekday> {
    Weekday::ALL[..5].to_vec()
}

fn default_first_day() -> Weekday {
    Weekday::Mon
}

impl Default for DutySchedule {
    fn default() -> Self {
        Self::office_hours()
    }
}

impl DutySchedule {
    /// 09:00 to 17:00, Monday to Friday.
    pub fn office_hours() -> Self {
        Self {
            start_hour: default_start(),
            end_hour: default_end(),
            days: default_days(),
            first_day: default_first_day(),
            excluded_days: Vec::new(),
        }
    }

    /// Every day of the week, all day.
    pub fn always() -> Self {
        Self {
            start_hour: 0.0,
            end_hour: 24.0,
            days: Weekday::ALL.to_vec(),
            ..Self::office_hours()
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let ok = self.start_hour.is_finite()
            && self.end_hour.is_finite()
            && self.start_hour >= 0.0
            && self.start_hour < self.end_hour
            && self.end_hour <= 24.0;
        if !ok {
            return Err(ScheduleError::Window {
                start: self.start_hour,
                end: self.end_hour,
            });
        }
        if self.days.is_empty() {
            return Err(ScheduleError::NoDays);
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ScheduleError> {
        let s: Self = toml::from_str(text).map_err(|e| ScheduleError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn weekday(&self, day: u64) -> Weekday {
        self.first_day.plus_days(day)
    }

    pub fn is_duty_day(&self, day: u64) -> bool {
        self.days.contains(&self.weekday(day)) && !self.excluded_days.contains(&day)
    }

    pub fn window_length(&self) -> Nanos {
        hours(self.end_hour) - hours(self.start_hour)
    }

    /// Duty window of `day`, if it is a duty day.
    pub fn window(&self, day: u64) -> Option<(Nanos, Nanos)> {
        self.is_duty_day(day).then(|| {
            let base = day * NANOS_PER_DAY;
            (base + hours(self.start_hour), base + hours(self.end_hour))
        })
    }

    pub fn is_on_duty(&self, t: Nanos) -> bool {
        self.window(t / NANOS_PER_DAY)
            .is_some_and(|(a, b)| t >= a && t < b)
    }

    /// Duty windows clipped to `[from, to)`, in order, empty pieces dropped.
    pub fn windows(&self, from: Nanos, to: Nanos) -> Vec<(Nanos, Nanos)> {
        if to <= from {
            return Vec::new();
        }
        (from / NANOS_PER_DAY..=(to - 1) / NANOS_PER_DAY)
            .filter_map(|d| self.window(d))
            .map(|(a, b)| (a.max(from), b.min(to)))
            .filter(|(a, b)| a < b)
            .collect()
    }

    /// Start of the next duty window at or after `t` (the current one if on duty).
    pub fn next_window(&self, t: Nanos) -> Option<(Nanos, Nanos)> {
        let day = t / NANOS_PER_DAY;
        (day..day + 7 + self.excluded_days.len() as u64 + 1)
            .filter_map(|d| self.window(d))
            .find(|&(_, b)| b > t)
    }
}

fn hours(h: f64) -> Nanos {
    (h * NANOS_PER_HOUR as f64).round() as Nanos
}
