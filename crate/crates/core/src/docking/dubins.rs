//! Shortest forward-only paths with bounded curvature.
//!
//! Each of the six words is solved in closed form in normalized coordinates
//! (start at the origin, goal on the positive x axis, unit turn radius).

use serde::{Deserialize, Serialize};

use super::pose::Pose;
use crate::scalar::{mod_two_pi, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DubinsWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::Lsl,
        DubinsWord::Rsr,
        DubinsWord::Lsr,
        DubinsWord::Rsl,
        DubinsWord::Rlr,
        DubinsWord::Lrl,
    ];

    pub fn kinds(self) -> [SegmentKind; 3] {
        use SegmentKind::*;
        match self {
            DubinsWord::Lsl => [Left, Straight, Left],
            DubinsWord::Rsr => [Right, Straight, Right],
            DubinsWord::Lsr => [Left, Straight, Right],
            DubinsWord::Rsl => [Right, Straight, Left],
            DubinsWord::Rlr => [Right, Left, Right],
            DubinsWord::Lrl => [Left, Right, Left],
        }
    }
}

/// One piece of a path. Arcs use the path's turn radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment<T> {
    pub kind: SegmentKind,
    /// Arc length in metres.
    pub length: T,
}

impl<T: Real> PathSegment<T> {
    /// Pose after travelling `s` metres of this segment from `from`.
    pub fn advance(&self, from: Pose<T>, s: T, radius: T) -> Pose<T> {
        let th = from.theta;
        match self.kind {
            SegmentKind::Straight => from.advanced(s),
            SegmentKind::Left => {
                let phi = s / radius;
                Pose::new(
                    from.x + radius * ((th + phi).sin() - th.sin()),
                    from.y + radius * (th.cos() - (th + phi).cos()),
                    th + phi,
                )
            }
            SegmentKind::Right => {
                let phi = s / radius;
                Pose::new(
                    from.x + radius * (th.sin() - (th - phi).sin()),
                    from.y + radius * ((th - phi).cos() - th.cos()),
                    th - phi,
                )
            }
        }
    }

    /// Signed curvature.
    pub fn curvature(&self, radius: T) -> T {
        match self.kind {
            SegmentKind::Left => radius.recip(),
            SegmentKind::Straight => T::zero(),
            SegmentKind::Right => -radius.recip(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath<T> {
    pub start: Pose<T>,
    pub end: Pose<T>,
    pub radius: T,
    pub word: DubinsWord,
    pub segments: [PathSegment<T>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DubinsError {
    #[error("turn radius must be positive and finite")]
    Radius,
    #[error("poses must be finite")]
    NonFinite,
}

impl<T: Real> DubinsPath<T> {
    pub fn length(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.length)
    }

    /// Pose at arc length `s` (clamped to the path).
    pub fn sample(&self, s: T) -> Pose<T> {
        sample_segments(self.start, &self.segments, self.radius, s)
    }

    /// Integrate the segments from `start`.
    pub fn integrate(&self) -> Pose<T> {
        self.segments
            .iter()
            .fold(self.start, |p, seg| seg.advance(p, seg.length, self.radius))
    }

    pub fn to_path(&self) -> Path<T> {
        Path {
            start: self.start,
            radius: self.radius,
            segments: self.segments.to_vec(),
        }
    }
}

/// A general chain of arcs and straights, used for tracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path<T> {
    pub start: Pose<T>,
    pub radius: T,
    pub segments: Vec<PathSegment<T>>,
}

impl<T: Real> Path<T> {
    pub fn length(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.length)
    }

    pub fn sample(&self, s: T) -> Pose<T> {
        sample_segments(self.start, &self.segments, self.radius, s)
    }

    pub fn end(&self) -> Pose<T> {
        self.sample(self.length())
    }

    pub fn push_straight(&mut self, length: T) {
        self.segments.push(PathSegment {
            kind: SegmentKind::Straight,
            length,
        });
    }

    /// Points every `step` metres, both ends included.
    pub fn polyline(&self, step: T) -> Vec<Pose<T>> {
        let total = self.length();
        let n = (total / step).ceil().to_usize().unwrap_or(0).max(1);
        let ds = total / T::from_usize(n).expect("sample count");
        (0..=n)
            .map(|i| self.sample(ds * T::from_usize(i).expect("index")))
            .collect()
    }
}

fn sample_segments<T: Real>(
    start: Pose<T>,
    segments: &[PathSegment<T>],
    radius: T,
    s: T,
) -> Pose<T> {
    let mut remaining = s.max(T::zero());
    let mut pose = start;
    for seg in segments {
        if remaining <= seg.length {
            return seg.advance(pose, remaining, radius);
        }
        pose = seg.advance(pose, seg.length, radius);
        remaining = remaining - seg.length;
    }
    pose
}

/// Normalized segment parameters `(t, p, q)` of one word, if it exists.
fn word_params<T: Real>(word: DubinsWord, alpha: T, beta: T, d: T) -> Option<[T; 3]> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let cab = (alpha - beta).cos();
    let two = T::lit(2.0);
    let d2 = d * d;
    match word {
        DubinsWord::Lsl => {
            let p2 = two + d2 - two * cab + two * d * (sa - sb);
            if p2 < T::zero() {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod_two_pi(tmp - alpha), p2.sqrt(), mod_two_pi(beta - tmp)])
        }
        DubinsWord::Rsr => {
            let p2 = two + d2 - two * cab + two * d * (sb - sa);
            if p2 < T::zero() {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod_two_pi(alpha - tmp), p2.sqrt(), mod_two_pi(tmp - beta)])
        }
        DubinsWord::Lsr => {
            let p2 = -two + d2 + two * cab + two * d * (sa + sb);
            if p2 < T::zero() {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-two).atan2(p);
            Some([mod_two_pi(tmp - alpha), p, mod_two_pi(tmp - beta)])
        }
        DubinsWord::Rsl => {
            let p2 = d2 - two + two * cab - two * d * (sa + sb);
            if p2 < T::zero() {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - two.atan2(p);
            Some([mod_two_pi(alpha - tmp), p, mod_two_pi(beta - tmp)])
        }
        DubinsWord::Rlr => {
            let c = (T::lit(6.0) - d2 + two * cab + two * d * (sa - sb)) / T::lit(8.0);
            if c.abs() > T::one() {
                return None;
            }
            let p = mod_two_pi(T::TAU() - c.acos());
            let t = mod_two_pi(alpha - (ca - cb).atan2(d - sa + sb) + p / two);
            Some([t, p, mod_two_pi(alpha - beta - t + p)])
        }
        DubinsWord::Lrl => {
            let c = (T::lit(6.0) - d2 + two * cab + two * d * (sb - sa)) / T::lit(8.0);
            if c.abs() > T::one() {
                return None;
            }
            let p = mod_two_pi(T::TAU() - c.acos());
            let t = mod_two_pi(-alpha - (ca - cb).atan2(d + sa - sb) + p / two);
            Some([t, p, mod_two_pi(beta - alpha - t + p)])
        }
    }
}

fn check<T: Real>(start: &Pose<T>, goal: &Pose<T>, radius: T) -> Result<(), DubinsError> {
    if !(radius > T::zero() && radius.is_finite()) {
        return Err(DubinsError::Radius);
    }
    let finite = [start.x, start.y, start.theta, goal.x, goal.y, goal.theta]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(DubinsError::NonFinite);
    }
    Ok(())
}

/// The path of one specific word, if that word connects the poses.
pub fn dubins_word<T: Real>(
    start: Pose<T>,
    goal: Pose<T>,
    radius: T,
    word: DubinsWord,
) -> Result<Option<DubinsPath<T>>, DubinsError> {
    check(&start, &goal, radius)?;
    let dx = goal.x - start.x;
    let dy = goal.y - start.y;
    let d = dx.hypot(dy) / radius;
    let phi = dy.atan2(dx);
    let alpha = mod_two_pi(start.theta - phi);
    let beta = mod_two_pi(goal.theta - phi);
    Ok(word_params(word, alpha, beta, d).map(|params| {
        let kinds = word.kinds();
        DubinsPath {
            start,
            end: goal,
            radius,
            word,
            segments: [0, 1, 2].map(|i| PathSegment {
                kind: kinds[i],
                length: params[i] * radius,
            }),
        }
    }))
}

/// Shortest of the six words. Coincident poses give a zero-length path.
pub fn plan_dubins<T: Real>(
    start: Pose<T>,
    goal: Pose<T>,
    radius: T,
) -> Result<DubinsPath<T>, DubinsError> {
    check(&start, &goal, radius)?;
    let same = (goal.x - start.x).abs() <= T::epsilon()
        && (goal.y - start.y).abs() <= T::epsilon()
        && goal.heading_error(start) <= T::epsilon();
    if same {
        let zero = |kind| PathSegment {
            kind,
            length: T::zero(),
        };
        return Ok(DubinsPath {
            start,
            end: goal,
            radius,
            word: DubinsWord::Lsl,
            segments: [
                zero(SegmentKind::Left),
                zero(SegmentKind::Straight),
                zero(SegmentKind::Left),
            ],
        });
    }
    let mut best: Option<DubinsPath<T>> = None;
    for word in DubinsWord::ALL {
        if let Some(p) = dubins_word(start, goal, radius, word)? {
            if best.as_ref().is_none_or(|b| p.length() < b.length()) {
                best = Some(p);
            }
        }
    }
    // LSL and RSR together exist for every pair of poses.
    Ok(best.expect("some Dubins word always exists"))
}
