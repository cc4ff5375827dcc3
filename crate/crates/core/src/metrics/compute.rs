//! Long-term-autonomy metrics computed from a closed event log.

use serde::{Deserialize, Serialize};

use super::event::{EventKind, EventLog, RobotMode};
use super::schedule::DutySchedule;
use crate::arbiter::{ErrorCategory, RecoveryKind};
use crate::time::{secs, to_hours, to_secs, Nanos};

/// A later dispatch inside this window marks a recovery as failed.
pub const RECOVERY_WINDOW_S: f64 = 60.0;
/// Navigation recoveries only fail on a later dispatch this close to their pose.
pub const NAVIGATION_RADIUS_M: f64 = 1.0;

/// Half-open `[a, b)` intervals, sorted and disjoint.
pub(crate) type Intervals = Vec<(Nanos, Nanos)>;

pub(crate) fn normalize(mut v: Intervals) -> Intervals {
    v.retain(|(a, b)| a < b);
    v.sort_unstable();
    let mut out: Intervals = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub(crate) fn intersect(x: &[(Nanos, Nanos)], y: &[(Nanos, Nanos)]) -> Intervals {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let a = x[i].0.max(y[j].0);
        let b = x[i].1.min(y[j].1);
        if a < b {
            out.push((a, b));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub(crate) fn total(v: &[(Nanos, Nanos)]) -> Nanos {
    v.iter().map(|(a, b)| b - a).sum()
}

/// Piecewise-constant robot mode over the log span. `None` before the first
/// mode change when its `from` is unknown, which only happens for logs
/// without any mode change.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTimeline {
    pub segments: Vec<(Nanos, Nanos, Option<RobotMode>)>,
}

impl ModeTimeline {
    pub fn from_log(log: &EventLog) -> Self {
        let (Some(start), Some(end)) = (log.start(), log.end()) else {
            return Self {
                segments: Vec::new(),
            };
        };
        let mut mode = log.events().iter().find_map(|e| match e.kind {
            EventKind::ModeChange { from, .. } => Some(from),
            _ => None,
        });
        let mut segments = Vec::new();
        let mut since = start;
        for e in log.events() {
            if let EventKind::ModeChange { to, .. } = e.kind {
                if e.t > since {
                    segments.push((since, e.t, mode));
                }
                since = e.t;
                mode = Some(to);
            }
        }
        if end > since {
            segments.push((since, end, mode));
        }
        Self { segments }
    }

    pub fn mode_at(&self, t: Nanos) -> Option<RobotMode> {
        self.segments
            .iter()
            .find(|(a, b, _)| t >= *a && t < *b)
            .and_then(|s| s.2)
    }

    pub fn select(&self, pred: impl Fn(Option<RobotMode>) -> bool) -> Intervals {
        normalize(
            self.segments
                .iter()
                .filter(|s| pred(s.2))
                .map(|s| (s.0, s.1))
                .collect(),
        )
    }
}

/// Commanded-motion intervals `[t - moving_s, t]` from odometry deltas.
pub(crate) fn motion_intervals(log: &EventLog) -> Intervals {
    normalize(
        log.events()
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::OdometryDelta { moving_s, .. } if moving_s > 0.0 => {
                    Some((e.t.saturating_sub(secs(moving_s)), e.t))
                }
                _ => None,
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryVerdict {
    /// Index of the dispatch event in the log.
    pub index: usize,
    pub t: Nanos,
    pub class: String,
    pub category: ErrorCategory,
    pub action: RecoveryKind,
    pub success: bool,
    /// Navigation dispatch without a pose; counted as failed.
    pub missing_pose: bool,
}

/// A dispatch succeeds unless another dispatch follows within
/// `(t, t + 60 s]`. For navigation recoveries the follow-up must also lie
/// within 1 m of the dispatch pose; follow-ups without a pose count as close.
pub fn classify_recoveries(log: &EventLog) -> Vec<RecoveryVerdict> {
    let events = log.events();
    let window = secs(RECOVERY_WINDOW_S);
    let dispatches: Vec<usize> = events
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.kind, EventKind::ActionDispatch { .. }))
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::with_capacity(dispatches.len());
    for (k, &i) in dispatches.iter().enumerate() {
        let EventKind::ActionDispatch {
            ref class,
            category,
            action,
            pose,
            ..
        } = events[i].kind
        else {
            unreachable!()
        };
        let t = events[i].t;
        let later = dispatches[k + 1..]
            .iter()
            .map(|&j| &events[j])
            .skip_while(|e| e.t <= t)
            .take_while(|e| e.t <= t + window);
        let navigation = category == ErrorCategory::Navigation;
        let (success, missing_pose) = match (navigation, pose) {
            (false, _) => (later.count() == 0, false),
            (true, None) => (false, true),
            (true, Some(p)) => {
                let close = later.filter(|e| match e.kind {
                    EventKind::ActionDispatch { pose: Some(q), .. } => {
                        p.distance(q) <= NAVIGATION_RADIUS_M
                    }
                    _ => true,
                });
                (close.count() == 0, false)
            }
        };
        out.push(RecoveryVerdict {
            index: i,
            t,
            class: class.clone(),
            category,
            action,
            success,
            missing_pose,
        });
    }
    out
}

/// Time between unrequested interventions, in hours of system-on time
/// (any mode but OFF). Requested interventions do not cut the log.
pub fn compute_tsl(log: &EventLog) -> Vec<f64> {
    let (Some(start), Some(end)) = (log.start(), log.end()) else {
        return Vec::new();
    };
    let on = ModeTimeline::from_log(log).select(|m| m != Some(RobotMode::Off));
    let mut cuts: Vec<Nanos> = log
        .events()
        .iter()
        .filter(|e| {
            matches!(
                e.kind,
                EventKind::ManualIntervention {
                    requested: false,
                    ..
                }
            )
        })
        .map(|e| e.t)
        .collect();
    cuts.insert(0, start);
    cuts.push(end);
    cuts.windows(2)
        .map(|w| to_hours(total(&intersect(&on, &[(w[0], w[1])]))))
        .collect()
}

/// Percentage of duty-window time spent patrolling with nonzero commanded speed.
/// Duty windows are clipped to the log span.
pub fn compute_autonomy_percentage(log: &EventLog, schedule: &DutySchedule) -> f64 {
    let (Some(start), Some(end)) = (log.start(), log.end()) else {
        return 0.0;
    };
    let duty = schedule.windows(start, end);
    let duty_total = total(&duty);
    if duty_total == 0 {
        return 0.0;
    }
    let patrol = ModeTimeline::from_log(log).select(|m| m == Some(RobotMode::Patrol));
    let serving = intersect(&intersect(&motion_intervals(log), &patrol), &duty);
    (100.0 * total(&serving) as f64 / duty_total as f64).clamp(0.0, 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceMotion {
    pub distance_m: f64,
    pub undocked_h: f64,
    pub motion_h: f64,
}

/// Distance is the odometry sum. Undocked time is any known mode but
/// CHARGING or OFF; motion time is commanded motion while PATROL or DOCKING.
pub fn compute_distance_and_motion(log: &EventLog) -> DistanceMotion {
    let distance_m = log
        .events()
        .iter()
        .map(|e| match e.kind {
            EventKind::OdometryDelta { distance_m, .. } => distance_m.max(0.0),
            _ => 0.0,
        })
        .sum();
    let timeline = ModeTimeline::from_log(log);
    let undocked = timeline.select(|m| m.is_some_and(RobotMode::is_undocked));
    let moving_modes = timeline.select(|m| m.is_some_and(RobotMode::counts_motion));
    let motion = intersect(&motion_intervals(log), &moving_modes);
    DistanceMotion {
        distance_m,
        undocked_h: to_hours(total(&undocked)),
        motion_h: to_hours(total(&motion)),
    }
}

/// Seconds in `mode` over the log, for diagnostics.
pub fn time_in_mode_s(log: &EventLog, mode: RobotMode) -> f64 {
    to_secs(total(
        &ModeTimeline::from_log(log).select(|m| m == Some(mode)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docking::Pose;
    use crate::metrics::Event;

    fn dispatch(t: f64, category: ErrorCategory, pose: Option<(f64, f64)>) -> Event {
        Event::new(
            secs(t),
            EventKind::ActionDispatch {
                class: format!("{category:?}").to_lowercase(),
                category,
                action: RecoveryKind::RestartNode,
                episode: 1,
                target: None,
                pose: pose.map(|(x, y)| Pose::new(x, y, 0.0)),
            },
        )
    }

    fn log(events: Vec<Event>) -> EventLog {
        EventLog::from_events(events).unwrap()
    }

    fn marker(h: f64) -> Event {
        Event::new(
            secs(h * 3600.0),
            EventKind::DetectionCount {
                count: 0,
                label: None,
            },
        )
    }

    fn intervention(h: f64, requested: bool) -> Event {
        Event::new(
            secs(h * 3600.0),
            EventKind::ManualIntervention {
                requested,
                session: None,
                supervisor: None,
                action: "fix".into(),
                note: String::new(),
            },
        )
    }

    #[test]
    fn follow_up_inside_window_fails() {
        let v = classify_recoveries(&log(vec![
            dispatch(100.0, ErrorCategory::Node, None),
            dispatch(130.0, ErrorCategory::Node, None),
        ]));
        assert!(!v[0].success);
        assert!(v[1].success);
    }

    #[test]
    fn follow_up_outside_window_succeeds() {
        let v = classify_recoveries(&log(vec![
            dispatch(100.0, ErrorCategory::Node, None),
            dispatch(190.0, ErrorCategory::Node, None),
        ]));
        assert!(v[0].success);
    }

    #[test]
    fn navigation_radius_clause() {
        let far = classify_recoveries(&log(vec![
            dispatch(0.0, ErrorCategory::Navigation, Some((0.0, 0.0))),
            dispatch(40.0, ErrorCategory::Navigation, Some((3.0, 0.0))),
        ]));
        assert!(far[0].success);
        let near = classify_recoveries(&log(vec![
            dispatch(0.0, ErrorCategory::Navigation, Some((0.0, 0.0))),
            dispatch(40.0, ErrorCategory::Navigation, Some((0.5, 0.0))),
        ]));
        assert!(!near[0].success);
    }

    #[test]
    fn navigation_without_pose_is_flagged() {
        let v = classify_recoveries(&log(vec![dispatch(0.0, ErrorCategory::Navigation, None)]));
        assert!(!v[0].success);
        assert!(v[0].missing_pose);
    }

    #[test]
    fn tsl_examples() {
        assert_eq!(
            compute_tsl(&log(vec![marker(0.0), marker(100.0)])),
            vec![100.0]
        );
        assert_eq!(
            compute_tsl(&log(vec![
                marker(0.0),
                intervention(20.0, false),
                intervention(50.0, false),
                marker(80.0)
            ])),
            vec![20.0, 30.0, 30.0]
        );
        assert_eq!(
            compute_tsl(&log(vec![
                marker(0.0),
                intervention(40.0, true),
                marker(80.0)
            ])),
            vec![80.0]
        );
    }

    fn mode(h: f64, from: RobotMode, to: RobotMode) -> Event {
        Event::new(
            secs(h * 3600.0),
            EventKind::ModeChange {
                from,
                to,
                pose: None,
            },
        )
    }

    fn odo(h: f64, distance_m: f64, moving_s: f64) -> Event {
        Event::new(
            secs(h * 3600.0),
            EventKind::OdometryDelta {
                distance_m,
                moving_s,
            },
        )
    }

    #[test]
    fn two_hours_at_028() {
        let l = log(vec![
            mode(0.0, RobotMode::Charging, RobotMode::Patrol),
            odo(2.0, 0.28 * 7200.0, 7200.0),
            mode(2.0, RobotMode::Patrol, RobotMode::Charging),
        ]);
        let d = compute_distance_and_motion(&l);
        assert!((d.distance_m - 2016.0).abs() < 1e-9);
        assert_eq!(d.undocked_h, 2.0);
        assert_eq!(d.motion_h, 2.0);
    }

    #[test]
    fn charging_gaps_are_not_undocked() {
        let l = log(vec![
            mode(0.0, RobotMode::Charging, RobotMode::Patrol),
            mode(1.0, RobotMode::Patrol, RobotMode::Charging),
            mode(3.0, RobotMode::Charging, RobotMode::Patrol),
            mode(4.0, RobotMode::Patrol, RobotMode::Charging),
            marker(6.0),
        ]);
        assert_eq!(compute_distance_and_motion(&l).undocked_h, 2.0);
        assert_eq!(compute_tsl(&l), vec![6.0]);
    }

    #[test]
    fn full_duty_motion_is_100_percent() {
        let l = log(vec![
            mode(8.0, RobotMode::Charging, RobotMode::Patrol),
            odo(18.0, 1.0, 10.0 * 3600.0),
            mode(18.0, RobotMode::Patrol, RobotMode::Charging),
            marker(24.0),
        ]);
        let s = DutySchedule::office_hours();
        // Log starts at 08:00, so the clipped window is the full 09:00 to 17:00.
        assert_eq!(compute_autonomy_percentage(&l, &s), 100.0);
    }

    #[test]
    fn off_time_is_not_system_on() {
        let l = log(vec![
            mode(0.0, RobotMode::Patrol, RobotMode::Off),
            intervention(2.0, false),
            mode(2.0, RobotMode::Off, RobotMode::Patrol),
            marker(5.0),
        ]);
        assert_eq!(compute_tsl(&l), vec![0.0, 3.0]);
    }
}
