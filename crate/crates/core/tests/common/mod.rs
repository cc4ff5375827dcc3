//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod bt;
pub mod orch;

use std::f64::consts::{PI, TAU};

use lta_core::arbiter::{ErrorCategory, RecoveryKind};
use lta_core::docking::{
    detect_triangle, extract_segments, simulate_docking, synthesize_scan, ApproachCone,
    DockingOutcome, DockingParams, Pose, TriangleLandmark,
};
use lta_core::metrics::{Event, EventKind, EventLog, RobotMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn turn(delta: f64) -> f64 {
    let a = delta.rem_euclid(TAU);
    // Snap full turns that are really rounding noise around zero.
    if TAU - a < 1e-12 {
        0.0
    } else {
        a
    }
}

/// Shortest forward path length by explicit circle geometry: every tangent
/// line between start and goal turning circles, and every circle touching both.
pub fn dubins_oracle(start: Pose<f64>, goal: Pose<f64>, r: f64) -> f64 {
    let center = |p: Pose<f64>, dir: f64| -> (f64, f64) {
        // dir = +1 for a left (counter-clockwise) turn, -1 for right.
        (p.x - dir * r * p.theta.sin(), p.y + dir * r * p.theta.cos())
    };
    let mut best = f64::INFINITY;
    for d1 in [1.0, -1.0] {
        for d2 in [1.0, -1.0] {
            let c1 = center(start, d1);
            let c2 = center(goal, d2);
            let (vx, vy) = (c2.0 - c1.0, c2.1 - c1.1);
            let dist = vx.hypot(vy);
            // Circle, straight, circle.
            let straight = if d1 == d2 {
                Some((vy.atan2(vx), dist))
            } else if dist >= 2.0 * r {
                let l = (dist * dist - 4.0 * r * r).max(0.0).sqrt();
                Some((vy.atan2(vx) + d1 * (2.0 * r).atan2(l), l))
            } else {
                None
            };
            if let Some((psi, l)) = straight {
                let len =
                    r * turn(d1 * (psi - start.theta)) + l + r * turn(d2 * (goal.theta - psi));
                best = best.min(len);
            }
            // Circle, circle, circle through a middle circle of opposite sense.
            if d1 == d2 && dist <= 4.0 * r && dist > 0.0 {
                let h = (4.0 * r * r - dist * dist / 4.0).max(0.0).sqrt();
                let (mx, my) = (c1.0 + vx / 2.0, c1.1 + vy / 2.0);
                let (nx, ny) = (-vy / dist, vx / dist);
                for side in [1.0, -1.0] {
                    let c3 = (mx + side * h * nx, my + side * h * ny);
                    let a1 = (c3.1 - c1.1).atan2(c3.0 - c1.0);
                    let a2 = (c3.1 - c2.1).atan2(c3.0 - c2.0);
                    let h1 = a1 + d1 * PI / 2.0;
                    let h2 = a2 + d1 * PI / 2.0;
                    let len = r * turn(d1 * (h1 - start.theta))
                        + r * turn(-d1 * (h2 - h1))
                        + r * turn(d1 * (goal.theta - h2));
                    best = best.min(len);
                }
            }
        }
    }
    best
}

/// Quadratic classifier: for every dispatch, scan every other event in the log.
pub fn classify_oracle(log: &EventLog) -> Vec<(usize, bool, bool)> {
    let events = log.events();
    let window = 60 * 1_000_000_000u64;
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let EventKind::ActionDispatch { category, pose, .. } = &e.kind else {
            continue;
        };
        let mut followups = Vec::new();
        for (j, f) in events.iter().enumerate() {
            if j == i {
                continue;
            }
            if let EventKind::ActionDispatch { pose: q, .. } = &f.kind {
                if f.t > e.t && f.t - e.t <= window {
                    followups.push(*q);
                }
            }
        }
        let verdict = if *category == ErrorCategory::Navigation {
            match pose {
                None => (false, true),
                Some(p) => {
                    let near = followups.iter().any(|q| match q {
                        Some(q) => ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt() <= 1.0,
                        None => true,
                    });
                    (!near, false)
                }
            }
        } else {
            (followups.is_empty(), false)
        };
        out.push((i, verdict.0, verdict.1));
    }
    out
}

/// A random time-ordered log dominated by dispatches clustered in time and space.
pub fn random_dispatch_log<R: Rng>(rng: &mut R, n: usize) -> EventLog {
    let categories = [
        ErrorCategory::Node,
        ErrorCategory::Navigation,
        ErrorCategory::Localization,
    ];
    let mut t = 0u64;
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        // Gaps straddle the 60 s window, with exact ties and boundary hits.
        t += match rng.random_range(0..10) {
            0 => 0,
            1 => 60_000_000_000,
            _ => rng.random_range(0..120_000_000_000u64),
        };
        let kind = if rng.random_bool(0.8) {
            let pose = rng.random_bool(0.9).then(|| {
                Pose::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    0.0,
                )
            });
            EventKind::ActionDispatch {
                class: "c".into(),
                category: categories[rng.random_range(0..categories.len())],
                action: RecoveryKind::Wait,
                episode: 0,
                target: None,
                pose,
            }
        } else {
            EventKind::ModeChange {
                from: RobotMode::Patrol,
                to: RobotMode::Recovering,
                pose: None,
            }
        };
        events.push(Event::new(t, kind));
    }
    EventLog::from_events(events).expect("ordered")
}

pub fn docking_station() -> Pose<f64> {
    Pose::new(4.0, -1.0, 0.3)
}

/// Worst position and heading error of noiseless landmark detection from
/// `runs` seeded starts in the approach cone.
pub fn noiseless_detection_error(runs: usize, seed: u64) -> (f64, f64) {
    let lm = TriangleLandmark::default();
    let config = DockingParams::default().scan.with_sigma(0.0);
    let edges = lm.station_edges(docking_station(), 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut head) = (0.0f64, 0.0f64);
    for _ in 0..runs {
        let robot = ApproachCone::default().sample(&lm, docking_station(), &mut rng);
        let scan = synthesize_scan(robot, &edges, &config, &mut rng);
        let truth = robot.between(docking_station());
        match detect_triangle(&extract_segments(&scan, 0.005), &lm, &Default::default()) {
            Ok(found) => {
                pos = pos.max(found.distance(truth));
                head = head.max(found.heading_error(truth));
            }
            Err(_) => return (f64::INFINITY, f64::INFINITY),
        }
    }
    (pos, head)
}

/// Docked runs and worst errors over `runs` seeded starts in the approach cone.
pub fn cone_trials(sigma: f64, runs: u64, seed: u64) -> (u64, f64, f64) {
    let lm = TriangleLandmark::default();
    let mut params = DockingParams::default();
    params.scan = params.scan.with_sigma(sigma);
    let mut docked = 0;
    let (mut worst_pos, mut worst_head) = (0.0f64, 0.0f64);
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        let start = ApproachCone::default().sample(&lm, docking_station(), &mut rng);
        if let DockingOutcome::Docked {
            position_error,
            heading_error,
            ..
        } = simulate_docking(start, docking_station(), &lm, &params, None, &mut rng)
        {
            assert!(position_error < 0.02 && heading_error < 3f64.to_radians());
            docked += 1;
            worst_pos = worst_pos.max(position_error);
            worst_head = worst_head.max(heading_error);
        }
    }
    (docked, worst_pos, worst_head)
}
