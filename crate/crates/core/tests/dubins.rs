mod common;

use std::time::Instant;

use lta_core::docking::{dubins_word, plan_dubins, DubinsWord, Pose};
use lta_core::Pose2D;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(rng: &mut ChaCha8Rng) -> (Pose<f64>, Pose<f64>, f64) {
    let pose = |rng: &mut ChaCha8Rng| {
        Pose::new(
            rng.random_range(-4.0..4.0),
            rng.random_range(-4.0..4.0),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    };
    let start = pose(rng);
    let goal = pose(rng);
    (start, goal, rng.random_range(0.1..2.0))
}

#[test]
fn shortest_path_matches_geometric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let begin = Instant::now();
    for case in 0..1000 {
        let (start, goal, r) = random_case(&mut rng);
        let planned = plan_dubins(start, goal, r).unwrap().length();
        let oracle = common::dubins_oracle(start, goal, r);
        assert!(
            (planned - oracle).abs() <= 1e-9 * oracle.max(1.0),
            "case {case}: planned {planned} oracle {oracle} ({start:?} -> {goal:?}, r {r})"
        );
    }
    assert!(begin.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn plan_is_the_minimum_over_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (start, goal, r) = random_case(&mut rng);
        let best = DubinsWord::ALL
            .iter()
            .filter_map(|&w| dubins_word(start, goal, r, w).unwrap())
            .map(|p| p.length())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(plan_dubins(start, goal, r).unwrap().length(), best);
    }
}

#[test]
fn straight_ahead_goal_is_a_line() {
    let p = plan_dubins(Pose2D::new(0.0, 0.0, 0.0), Pose2D::new(3.0, 0.0, 0.0), 0.5).unwrap();
    assert!((p.length() - 3.0).abs() < 1e-12);
}

#[test]
fn bad_radius_is_rejected() {
    let o = Pose::origin();
    assert!(plan_dubins(o, Pose::new(1.0, 0.0, 0.0), 0.0).is_err());
    assert!(plan_dubins(o, Pose::new(1.0, 0.0, 0.0), f64::NAN).is_err());
}

#[test]
fn single_precision_agrees_with_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let (s, g, r) = random_case(&mut rng);
        let d = plan_dubins(s, g, r).unwrap().length();
        let f = plan_dubins(s.cast::<f32>(), g.cast::<f32>(), r as f32)
            .unwrap()
            .length();
        assert!((d - f as f64).abs() <= 1e-3 * d.max(1.0), "{d} vs {f}");
    }
}

proptest! {
    #[test]
    fn path_ends_at_goal(
        x in -4.0..4.0f64, y in -4.0..4.0f64, th in -3.1..3.1f64,
        gth in -3.1..3.1f64, r in 0.1..1.5f64,
    ) {
        let start = Pose::new(x, y, th);
        let goal = Pose::new(0.0, 0.0, gth);
        let path = plan_dubins(start, goal, r).unwrap();
        let end = path.integrate();
        prop_assert!(end.distance(goal) < 1e-6, "{end:?}");
        prop_assert!(end.heading_error(goal) < 1e-6);
        // Never shorter than the straight-line distance.
        prop_assert!(path.length() + 1e-9 >= start.distance(goal));
    }
}
