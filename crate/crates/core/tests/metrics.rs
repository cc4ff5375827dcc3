mod common;

use lta_core::arbiter::{ErrorCategory, RecoveryKind};
use lta_core::metrics::{
    classify_recoveries, compute_autonomy_percentage, compute_distance_and_motion, compute_tsl,
    report, DutySchedule, Event, EventKind, EventLog, EventStore, FileStore, MemoryStore,
    RobotMode,
};
use lta_core::time::{secs, NANOS_PER_HOUR};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mode(t: f64, from: RobotMode, to: RobotMode) -> Event {
    Event::new(
        secs(t),
        EventKind::ModeChange {
            from,
            to,
            pose: None,
        },
    )
}

fn odometry(t: f64, distance_m: f64, moving_s: f64) -> Event {
    Event::new(
        secs(t),
        EventKind::OdometryDelta {
            distance_m,
            moving_s,
        },
    )
}

fn intervention(t: f64, requested: bool) -> Event {
    Event::new(
        secs(t),
        EventKind::ManualIntervention {
            requested,
            session: None,
            supervisor: None,
            action: "push".into(),
            note: String::new(),
        },
    )
}

#[test]
fn classifier_matches_quadratic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut disagreements = 0;
    for _ in 0..100 {
        let n = rng.random_range(0..=10_000);
        let log = common::random_dispatch_log(&mut rng, n);
        let fast: Vec<_> = classify_recoveries(&log)
            .into_iter()
            .map(|v| (v.index, v.success, v.missing_pose))
            .collect();
        let slow = common::classify_oracle(&log);
        assert_eq!(fast.len(), slow.len());
        disagreements += fast.iter().zip(&slow).filter(|(a, b)| a != b).count();
    }
    assert_eq!(disagreements, 0);
}

#[test]
fn window_edges() {
    let dispatch = |t: f64, category, x: f64| {
        Event::new(
            secs(t),
            EventKind::ActionDispatch {
                class: "c".into(),
                category,
                action: RecoveryKind::RestartNode,
                episode: 0,
                target: None,
                pose: Some(lta_core::Pose2D::new(x, 0.0, 0.0)),
            },
        )
    };
    let log = EventLog::from_events(vec![
        dispatch(0.0, ErrorCategory::Node, 0.0),
        // Exactly 60 s later: still inside the window.
        dispatch(60.0, ErrorCategory::Node, 0.0),
        // Far away navigation follow-ups do not count against each other.
        dispatch(200.0, ErrorCategory::Navigation, 0.0),
        dispatch(210.0, ErrorCategory::Navigation, 5.0),
        dispatch(400.0, ErrorCategory::Node, 0.0),
        dispatch(460.001, ErrorCategory::Node, 0.0),
    ])
    .unwrap();
    let success: Vec<bool> = classify_recoveries(&log)
        .iter()
        .map(|v| v.success)
        .collect();
    assert_eq!(success, [false, true, true, true, true, true]);
}

#[test]
fn autonomy_counts_patrol_motion_in_duty_time() {
    let log = EventLog::from_events(vec![
        mode(0.0, RobotMode::Charging, RobotMode::Patrol),
        odometry(3600.0, 100.0, 1800.0),
        mode(5400.0, RobotMode::Patrol, RobotMode::Recovering),
        // Moving while recovering is not service motion.
        odometry(6000.0, 10.0, 600.0),
        mode(7200.0, RobotMode::Recovering, RobotMode::Charging),
    ])
    .unwrap();
    let a = compute_autonomy_percentage(&log, &DutySchedule::always());
    assert!((a - 25.0).abs() < 1e-9, "{a}");
    let dm = compute_distance_and_motion(&log);
    assert_eq!(dm.distance_m, 110.0);
    assert!((dm.undocked_h - 2.0).abs() < 1e-12);
    assert!((dm.motion_h - 0.5).abs() < 1e-12);
}

#[test]
fn tsl_is_cut_only_by_unrequested_interventions() {
    let log = EventLog::from_events(vec![
        mode(0.0, RobotMode::Charging, RobotMode::Patrol),
        intervention(3600.0, false),
        intervention(5400.0, true),
        mode(7200.0, RobotMode::Patrol, RobotMode::Off),
        mode(10800.0, RobotMode::Off, RobotMode::Patrol),
        intervention(14400.0, false),
    ])
    .unwrap();
    let tsl = compute_tsl(&log);
    // Off time does not count.
    assert_eq!(tsl.len(), 3);
    assert!((tsl[0] - 1.0).abs() < 1e-12);
    assert!((tsl[1] - 2.0).abs() < 1e-12);
    assert!(tsl[2].abs() < 1e-12);
}

#[test]
fn empty_log_reports_zeroes() {
    let r = report(&EventLog::new(), &DutySchedule::office_hours());
    assert_eq!(r.autonomy_percentage, 0.0);
    assert_eq!(r.docking.attempts, 0);
}

#[test]
fn million_events_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut expected = Vec::with_capacity(1_000_000);
    {
        let mut store = FileStore::open(&path).unwrap().with_sync_every(100_000);
        let mut t = 0;
        for i in 0..1_000_000u64 {
            t += rng.random_range(0..1_000_000);
            let e = Event::new(
                t,
                EventKind::DetectionCount {
                    count: i,
                    label: None,
                },
            );
            store.append("bench", e.clone()).unwrap();
            expected.push(e);
        }
        store.flush().unwrap();
    }
    let mut store = FileStore::open(&path).unwrap();
    assert_eq!(store.len(), 1_000_000);
    assert_eq!(
        store.read(765_432).unwrap().as_ref(),
        Some(&expected[765_432])
    );
    let mut n = 0;
    for (got, want) in store.replay().unwrap().zip(&expected) {
        assert_eq!(&got.unwrap(), want);
        n += 1;
    }
    assert_eq!(n, expected.len());
}

#[test]
fn producers_keep_their_own_order() {
    let mut store = MemoryStore::new();
    store
        .append(
            "a",
            Event::new(
                10,
                EventKind::DetectionCount {
                    count: 1,
                    label: None,
                },
            ),
        )
        .unwrap();
    store
        .append(
            "b",
            Event::new(
                5,
                EventKind::DetectionCount {
                    count: 2,
                    label: None,
                },
            ),
        )
        .unwrap();
    assert!(store
        .append(
            "a",
            Event::new(
                9,
                EventKind::DetectionCount {
                    count: 3,
                    label: None
                }
            )
        )
        .is_err());
    let log = store.to_log().unwrap();
    assert_eq!(log.start(), Some(5));
}

fn arb_mode() -> impl Strategy<Value = RobotMode> {
    prop_oneof![
        Just(RobotMode::Patrol),
        Just(RobotMode::Docking),
        Just(RobotMode::Charging),
        Just(RobotMode::Recovering),
        Just(RobotMode::Error),
        Just(RobotMode::Off),
    ]
}

fn arb_log() -> impl Strategy<Value = EventLog> {
    prop::collection::vec(
        (
            0u64..4 * NANOS_PER_HOUR,
            arb_mode(),
            0.0..50.0f64,
            0.0..900.0f64,
            any::<bool>(),
        ),
        0..60,
    )
    .prop_map(|mut rows| {
        rows.sort_by_key(|r| r.0);
        let mut prev = RobotMode::Charging;
        let events = rows
            .into_iter()
            .map(|(t, m, d, s, odo)| {
                if odo {
                    Event::new(
                        t,
                        EventKind::OdometryDelta {
                            distance_m: d,
                            moving_s: s,
                        },
                    )
                } else {
                    let e = Event::new(
                        t,
                        EventKind::ModeChange {
                            from: prev,
                            to: m,
                            pose: None,
                        },
                    );
                    prev = m;
                    e
                }
            })
            .collect();
        EventLog::from_events(events).unwrap()
    })
}

proptest! {
    #[test]
    fn metric_bounds(log in arb_log()) {
        let a = compute_autonomy_percentage(&log, &DutySchedule::always());
        prop_assert!((0.0..=100.0).contains(&a));
        let dm = compute_distance_and_motion(&log);
        let span_h = match (log.start(), log.end()) {
            (Some(s), Some(e)) => (e - s) as f64 / NANOS_PER_HOUR as f64,
            _ => 0.0,
        };
        prop_assert!(dm.motion_h <= dm.undocked_h + 1e-9);
        prop_assert!(dm.undocked_h <= span_h + 1e-9);
        let tsl: f64 = compute_tsl(&log).iter().sum();
        prop_assert!(tsl <= span_h + 1e-9);
    }

    #[test]
    fn lines_round_trip(t in any::<u64>(), d in 0.0..1e6f64, s in 0.0..1e4f64) {
        let e = Event::new(t, EventKind::OdometryDelta { distance_m: d, moving_s: s });
        prop_assert_eq!(Event::from_line(&e.to_line()).unwrap(), e);
    }
}
