use serde::{Deserialize, Serialize};

use super::dubins::Path;
use super::pose::{Point, Pose};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurePursuitState<T> {
    pub lookahead: T,
    pub speed: T,
    pub goal_tolerance: T,
    /// Arc length of the last closest point; the search never jumps far from it.
    pub progress: T,
}

impl<T: Real> PurePursuitState<T> {
    pub fn new(lookahead: T, speed: T, goal_tolerance: T) -> Self {
        assert!(
            lookahead > T::zero() && speed > T::zero(),
            "lookahead and speed must be positive"
        );
        Self {
            lookahead,
            speed,
            goal_tolerance,
            progress: T::zero(),
        }
    }

    /// Lateral deviation beyond which the path counts as lost.
    pub fn corridor(&self) -> T {
        self.lookahead * T::lit(5.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PursuitCommand<T> {
    Drive { v: T, omega: T },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PursuitError {
    #[error("lost path: {deviation:.3} m off")]
    LostPath { deviation: f64 },
}

/// Angular rate that steers onto a point at lateral offset `y_l` (robot frame).
pub fn pursuit_omega<T: Real>(v: T, y_l: T, lookahead: T) -> T {
    v * (y_l + y_l) / (lookahead * lookahead)
}

/// Closest arc length on `path` (extended straight past its end) near `hint`.
fn closest<T: Real>(pose: Pose<T>, path: &Path<T>, hint: T, window: T) -> (T, T) {
    let total = path.length();
    let lo = (hint - window).max(T::zero());
    let hi = (hint + window).min(total);
    let step = T::lit(0.005);
    let mut best = (hint.min(total), T::infinity());
    let mut s = lo;
    loop {
        let d = path.sample(s).distance(pose);
        if d < best.1 {
            best = (s, d);
        }
        if s >= hi {
            break;
        }
        s = (s + step).min(hi);
    }
    if best.0 >= total - step {
        let end = path.end();
        let along = end.inverse_transform_point(pose.position());
        if along.x > T::zero() {
            return (total + along.x, along.y.abs());
        }
    }
    best
}

fn point_at<T: Real>(path: &Path<T>, s: T) -> Point<T> {
    let total = path.length();
    if s <= total {
        path.sample(s).position()
    } else {
        path.end().advanced(s - total).position()
    }
}

/// One control step. Steers toward the point `lookahead` metres of arc length
/// beyond the closest path point.
pub fn pure_pursuit_step<T: Real>(
    pose: Pose<T>,
    path: &Path<T>,
    state: &mut PurePursuitState<T>,
) -> Result<PursuitCommand<T>, PursuitError> {
    let total = path.length();
    let (s, deviation) = closest(
        pose,
        path,
        state.progress,
        state.lookahead + state.lookahead,
    );
    if deviation > state.corridor() {
        return Err(PursuitError::LostPath {
            deviation: deviation.to_f64_lossy(),
        });
    }
    state.progress = s.min(total);
    if s >= total || pose.distance(path.end()) <= state.goal_tolerance {
        return Ok(PursuitCommand::Done);
    }
    let target = pose.inverse_transform_point(point_at(path, s + state.lookahead));
    Ok(PursuitCommand::Drive {
        v: state.speed,
        omega: pursuit_omega(state.speed, target.y, state.lookahead),
    })
}

/// Exact unicycle integration over `dt`.
pub fn integrate_unicycle<T: Real>(pose: Pose<T>, v: T, omega: T, dt: T) -> Pose<T> {
    if omega.abs() < T::lit(1e-12) {
        return pose.advanced(v * dt);
    }
    let th = pose.theta;
    let th1 = th + omega * dt;
    let r = v / omega;
    Pose::new(
        pose.x + r * (th1.sin() - th.sin()),
        pose.y - r * (th1.cos() - th.cos()),
        th1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docking::{plan_dubins, PathSegment, SegmentKind};

    fn straight(len: f64) -> Path<f64> {
        Path {
            start: Pose::origin(),
            radius: 0.3,
            segments: vec![PathSegment {
                kind: SegmentKind::Straight,
                length: len,
            }],
        }
    }

    #[test]
    fn aligned_on_straight_path_goes_straight() {
        let mut st = PurePursuitState::new(0.5, 0.15, 0.005);
        let cmd = pure_pursuit_step(Pose::new(1.0, 0.0, 0.0), &straight(3.0), &mut st).unwrap();
        assert_eq!(
            cmd,
            PursuitCommand::Drive {
                v: 0.15,
                omega: 0.0
            }
        );
    }

    #[test]
    fn curvature_law() {
        assert!((pursuit_omega(0.2f64, 0.5, 1.0) - 0.2).abs() < 1e-15);
        assert!(pursuit_omega(0.2f64, -0.5, 1.0) < 0.0);
    }

    #[test]
    fn left_offset_point_turns_left() {
        let mut st = PurePursuitState::new(1.0, 0.2, 0.005);
        // Robot sits 0.5 m right of the path, so the lookahead point is 0.5 m to its left.
        let cmd = pure_pursuit_step(Pose::new(1.0, -0.5, 0.0), &straight(5.0), &mut st).unwrap();
        let PursuitCommand::Drive { omega, .. } = cmd else {
            panic!()
        };
        assert!((omega - 0.2).abs() < 1e-9, "{omega}");
    }

    #[test]
    fn at_end_is_done() {
        let mut st = PurePursuitState::new(0.5, 0.15, 0.005);
        assert_eq!(
            pure_pursuit_step(Pose::new(2.998, 0.0, 0.0), &straight(3.0), &mut st).unwrap(),
            PursuitCommand::Done
        );
    }

    #[test]
    fn far_off_path_is_lost() {
        let mut st = PurePursuitState::new(0.5, 0.15, 0.005);
        assert!(pure_pursuit_step(Pose::new(1.0, 3.0, 0.0), &straight(3.0), &mut st).is_err());
    }

    #[test]
    fn tracks_a_dubins_path() {
        let path = plan_dubins(Pose::origin(), Pose::new(2.0, 1.0, 0.0), 0.3)
            .unwrap()
            .to_path();
        let mut st = PurePursuitState::new(0.3, 0.15, 0.005);
        let mut pose = Pose::origin();
        for _ in 0..10_000 {
            match pure_pursuit_step(pose, &path, &mut st).unwrap() {
                PursuitCommand::Drive { v, omega } => {
                    pose = integrate_unicycle(pose, v, omega, 0.02)
                }
                PursuitCommand::Done => break,
            }
        }
        assert!(pose.distance(path.end()) < 0.05, "{pose:?}");
    }
}
