//! Assembled metrics and their two renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::compute::{
    classify_recoveries, compute_autonomy_percentage, compute_distance_and_motion, compute_tsl,
};
use super::event::{round6, EventKind, EventLog};
use super::schedule::DutySchedule;
use crate::arbiter::RecoveryKind;
use crate::time::to_hours;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TslSummary {
    pub intervals_h: Vec<f64>,
    pub min_h: f64,
    pub mean_h: f64,
    pub max_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub action: RecoveryKind,
    pub dispatched: u64,
    pub succeeded: u64,
    /// Percent; absent when nothing was dispatched.
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DockingStats {
    pub attempts: u64,
    pub successes: u64,
    pub failures: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub span_h: f64,
    pub duty_h: f64,
    pub total_distance_m: f64,
    pub time_undocked_h: f64,
    pub time_in_motion_h: f64,
    pub autonomy_percentage: f64,
    pub tsl: TslSummary,
    pub recoveries: Vec<RecoveryStats>,
    /// Navigation dispatches without a pose, counted as failed.
    pub flagged_dispatches: u64,
    pub docking: DockingStats,
    pub supervisor_requests: u64,
    pub requested_interventions: u64,
    pub unplanned_interventions: u64,
    pub detections: u64,
}

pub fn report(log: &EventLog, schedule: &DutySchedule) -> MetricsReport {
    let dm = compute_distance_and_motion(log);
    let tsl = compute_tsl(log);
    let (min_h, max_h, mean_h) = if tsl.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let min = tsl.iter().copied().fold(f64::INFINITY, f64::min);
        let max = tsl.iter().copied().fold(0.0, f64::max);
        (min, max, tsl.iter().sum::<f64>() / tsl.len() as f64)
    };
    let tsl = TslSummary {
        intervals_h: tsl.into_iter().map(round6).collect(),
        min_h: round6(min_h),
        mean_h: round6(mean_h),
        max_h: round6(max_h),
    };

    let verdicts = classify_recoveries(log);
    let mut per_kind: BTreeMap<RecoveryKind, (u64, u64)> = BTreeMap::new();
    for v in verdicts
        .iter()
        .filter(|v| v.action != RecoveryKind::RequestSupervisor)
    {
        let e = per_kind.entry(v.action).or_default();
        e.0 += 1;
        e.1 += u64::from(v.success);
    }
    let recoveries = per_kind
        .into_iter()
        .map(|(action, (dispatched, succeeded))| RecoveryStats {
            action,
            dispatched,
            succeeded,
            success_rate: (dispatched > 0)
                .then(|| round6(100.0 * succeeded as f64 / dispatched as f64)),
        })
        .collect();

    let mut docking = DockingStats::default();
    let (mut supervisor_requests, mut requested, mut unplanned, mut detections) = (0, 0, 0, 0);
    for e in log.events() {
        match &e.kind {
            EventKind::DockingAttempt {
                success, reason, ..
            } => {
                docking.attempts += 1;
                if *success {
                    docking.successes += 1;
                } else {
                    let key = reason.clone().unwrap_or_else(|| "unknown".into());
                    *docking.failures.entry(key).or_default() += 1;
                }
            }
            EventKind::SupervisorRequest { .. } => supervisor_requests += 1,
            EventKind::ManualIntervention {
                requested: true, ..
            } => requested += 1,
            EventKind::ManualIntervention {
                requested: false, ..
            } => unplanned += 1,
            EventKind::DetectionCount { count, .. } => detections += count,
            _ => {}
        }
    }

    let span = match (log.start(), log.end()) {
        (Some(a), Some(b)) => b - a,
        _ => 0,
    };
    let duty = match (log.start(), log.end()) {
        (Some(a), Some(b)) => schedule.windows(a, b).iter().map(|(x, y)| y - x).sum(),
        _ => 0,
    };

    MetricsReport {
        span_h: round6(to_hours(span)),
        duty_h: round6(to_hours(duty)),
        total_distance_m: round6(dm.distance_m),
        time_undocked_h: round6(dm.undocked_h),
        time_in_motion_h: round6(dm.motion_h),
        autonomy_percentage: round6(compute_autonomy_percentage(log, schedule)),
        tsl,
        recoveries,
        flagged_dispatches: verdicts.iter().filter(|v| v.missing_pose).count() as u64,
        docking,
        supervisor_requests,
        requested_interventions: requested,
        unplanned_interventions: unplanned,
        detections,
    }
}

impl MetricsReport {
    pub fn recovery(&self, action: RecoveryKind) -> Option<&RecoveryStats> {
        self.recoveries.iter().find(|r| r.action == action)
    }

    /// Stable JSON document, identical for identical logs.
    pub fn render_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, String); 6] = [
            (
                "Distance",
                format!("{:.1} km", self.total_distance_m / 1000.0),
            ),
            ("Time undocked", format!("{:.1} h", self.time_undocked_h)),
            ("Time in motion", format!("{:.1} h", self.time_in_motion_h)),
            (
                "A%",
                format!(
                    "{:.1} % of {:.1} h duty",
                    self.autonomy_percentage, self.duty_h
                ),
            ),
            (
                "TSL",
                format!(
                    "{} intervals, min {:.1} h, mean {:.1} h, max {:.1} h",
                    self.tsl.intervals_h.len(),
                    self.tsl.min_h,
                    self.tsl.mean_h,
                    self.tsl.max_h
                ),
            ),
            ("Detections", self.detections.to_string()),
        ];
        let _ = writeln!(out, "Long-term autonomy ({:.1} h logged)", self.span_h);
        for (k, v) in rows {
            let _ = writeln!(out, "  {k:<16}{v}");
        }

        let _ = writeln!(out);
        let _ = writeln!(out, "Recovery behaviours");
        let _ = writeln!(
            out,
            "  {:<22}{:>10}{:>10}{:>10}",
            "action", "runs", "ok", "rate"
        );
        for r in &self.recoveries {
            let rate = r
                .success_rate
                .map(|p| format!("{p:.1} %"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  {:<22}{:>10}{:>10}{:>10}",
                r.action.as_str(),
                r.dispatched,
                r.succeeded,
                rate
            );
        }
        if self.recoveries.is_empty() {
            let _ = writeln!(out, "  (none)");
        }
        if self.flagged_dispatches > 0 {
            let _ = writeln!(
                out,
                "  {} navigation dispatches without pose",
                self.flagged_dispatches
            );
        }

        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Docking           {} attempts, {} docked",
            self.docking.attempts, self.docking.successes
        );
        for (reason, n) in &self.docking.failures {
            let _ = writeln!(out, "  failed: {reason} x{n}");
        }
        let _ = writeln!(
            out,
            "Supervisor        {} requests",
            self.supervisor_requests
        );
        let _ = writeln!(
            out,
            "Interventions     {} requested, {} unplanned",
            self.requested_interventions, self.unplanned_interventions
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_gives_zeroed_report() {
        let r = report(&EventLog::new(), &DutySchedule::office_hours());
        assert_eq!(r.total_distance_m, 0.0);
        assert_eq!(r.autonomy_percentage, 0.0);
        assert!(r.tsl.intervals_h.is_empty());
        assert_eq!(r.tsl.min_h, 0.0);
        assert!(r.recoveries.is_empty());
        assert_eq!(r.docking, DockingStats::default());
        assert!(r.render_human().contains("(none)"));
        assert_eq!(r.render_machine(), r.clone().render_machine());
    }
}
