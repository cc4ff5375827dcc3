use std::fmt::Write;

use lta_core::metrics::Event;
use lta_core::time::{Nanos, NANOS_PER_DAY, NANOS_PER_SEC};
use serde::Serialize;
use serde_json::Value;

/// `d3 14:05:09` for a time since the start of day 0.
pub fn clock(t: Nanos) -> String {
    let day = t / NANOS_PER_DAY;
    let s = (t % NANOS_PER_DAY) / NANOS_PER_SEC;
    format!("d{day} {:02}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

/// One line per event: time, kind, then its fields as `key=value`.
pub fn event_line(e: &Event) -> String {
    let mut out = format!("{}  {:<20}", clock(e.t), e.kind.name());
    if let Ok(Value::Object(mut fields)) = serde_json::to_value(e) {
        fields.remove("t");
        fields.remove("kind");
        for (k, v) in fields {
            match v {
                Value::Null => {}
                Value::String(s) if s.is_empty() => {}
                Value::String(s) => {
                    let _ = write!(out, " {k}={s}");
                }
                other => {
                    let _ = write!(out, " {k}={other}");
                }
            }
        }
    }
    out.trim_end().to_string()
}

#[derive(Debug, Serialize)]
pub struct SimSummary {
    pub scenario: String,
    pub seed: u64,
    pub days: u64,
    pub events: usize,
    pub out: String,
}

impl SimSummary {
    pub fn human(&self) -> String {
        format!(
            "{}: {} days, seed {}, {} events written to {}\n",
            self.scenario, self.days, self.seed, self.events, self.out
        )
    }
}

#[derive(Debug, Serialize)]
pub struct DockRun {
    pub run: u32,
    pub range_m: f64,
    pub bearing_deg: f64,
    pub yaw_deg: f64,
    pub docked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position_error_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_error_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub time_s: f64,
}

#[derive(Debug, Serialize)]
pub struct DockDemo {
    pub seed: u64,
    pub sigma_m: f64,
    pub docked: u32,
    pub total: u32,
    pub worst_position_error_m: f64,
    pub worst_heading_error_deg: f64,
    pub runs: Vec<DockRun>,
}

impl DockDemo {
    pub fn human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4} {:>8} {:>9} {:>7}  {:<10} {:>9} {:>9} {:>8}",
            "run", "range m", "bearing", "yaw", "outcome", "pos cm", "head deg", "time s"
        );
        for r in &self.runs {
            let outcome = if r.docked {
                "docked".to_string()
            } else {
                r.failure.clone().unwrap_or_default()
            };
            let cm = r
                .position_error_m
                .map(|e| format!("{:.2}", e * 100.0))
                .unwrap_or_else(|| "-".into());
            let deg = r
                .heading_error_deg
                .map(|e| format!("{e:.2}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>4} {:>8.2} {:>9.1} {:>7.1}  {:<10} {:>9} {:>9} {:>8.1}",
                r.run, r.range_m, r.bearing_deg, r.yaw_deg, outcome, cm, deg, r.time_s
            );
        }
        let rate = if self.total == 0 {
            0.0
        } else {
            100.0 * self.docked as f64 / self.total as f64
        };
        let _ = writeln!(
            out,
            "docked {}/{} ({rate:.1} %), worst {:.2} cm / {:.2} deg, sigma {} mm, seed {}",
            self.docked,
            self.total,
            self.worst_position_error_m * 100.0,
            self.worst_heading_error_deg,
            self.sigma_m * 1000.0,
            self.seed
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lta_core::metrics::{EventKind, RobotMode};

    #[test]
    fn clock_counts_days() {
        assert_eq!(clock(0), "d0 00:00:00");
        assert_eq!(clock(NANOS_PER_DAY + 3_661 * NANOS_PER_SEC), "d1 01:01:01");
    }

    #[test]
    fn event_line_lists_fields() {
        let e = Event::new(
            9 * 3600 * NANOS_PER_SEC,
            EventKind::ModeChange {
                from: RobotMode::Charging,
                to: RobotMode::Patrol,
                pose: None,
            },
        );
        assert_eq!(
            event_line(&e),
            "d0 09:00:00  mode_change          from=CHARGING to=PATROL"
        );
    }
}
