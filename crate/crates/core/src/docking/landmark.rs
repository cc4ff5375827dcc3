use serde::{Deserialize, Serialize};

use super::pose::{Point, Pose};
use super::scan::Edge;
use super::segments::LineSegment;
use crate::scalar::Real;

/// V-shaped reflector mounted on the charging station.
///
/// The apex pose sits at the tip of the V with its heading along the outward
/// bisector. Both sides run back from the apex at `half_angle` from the inward
/// bisector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleLandmark<T> {
    pub half_angle: T,
    pub side_length: T,
    /// Docked robot pose relative to the apex pose.
    pub dock_offset: Pose<T>,
}

impl<T: Real> Default for TriangleLandmark<T> {
    fn default() -> Self {
        Self {
            half_angle: T::lit(60f64.to_radians()),
            side_length: T::lit(0.4),
            dock_offset: Pose::new(T::lit(0.35), T::zero(), T::PI()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LandmarkError {
    #[error("apex half-angle must lie in (0, pi/2)")]
    HalfAngle,
    #[error("side length must be positive")]
    SideLength,
}

impl<T: Real> TriangleLandmark<T> {
    pub fn validate(&self) -> Result<(), LandmarkError> {
        if !(self.half_angle > T::zero() && self.half_angle < T::FRAC_PI_2()) {
            return Err(LandmarkError::HalfAngle);
        }
        if !(self.side_length > T::zero()) {
            return Err(LandmarkError::SideLength);
        }
        Ok(())
    }

    pub fn interior_angle(&self) -> T {
        self.half_angle + self.half_angle
    }

    /// Far ends of the two sides for a landmark at `apex`.
    pub fn side_ends(&self, apex: Pose<T>) -> [Point<T>; 2] {
        let back = apex.theta + T::PI();
        [back - self.half_angle, back + self.half_angle].map(|a| {
            let (s, c) = a.sin_cos();
            Point::new(apex.x + self.side_length * c, apex.y + self.side_length * s)
        })
    }

    pub fn edges(&self, apex: Pose<T>) -> [Edge<T>; 2] {
        self.side_ends(apex)
            .map(|end| Edge::new(apex.position(), end))
    }

    /// The landmark plus the wall it is mounted on, extending `wall_extent` past each side.
    pub fn station_edges(&self, apex: Pose<T>, wall_extent: T) -> Vec<Edge<T>> {
        let [a, b] = self.side_ends(apex);
        let dir = Point::new(b.x - a.x, b.y - a.y);
        let n = dir.norm();
        let (ux, uy) = (dir.x / n, dir.y / n);
        let mut edges = self.edges(apex).to_vec();
        edges.push(Edge::new(
            Point::new(a.x - ux * wall_extent, a.y - uy * wall_extent),
            a,
        ));
        edges.push(Edge::new(
            b,
            Point::new(b.x + ux * wall_extent, b.y + uy * wall_extent),
        ));
        edges
    }

    pub fn dock_pose(&self, apex: Pose<T>) -> Pose<T> {
        apex.compose(self.dock_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectTolerances<T> {
    pub angle: T,
    pub length: T,
}

impl<T: Real> Default for DetectTolerances<T> {
    fn default() -> Self {
        Self {
            angle: T::lit(10f64.to_radians()),
            length: T::lit(0.06),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error("no landmark")]
    NoLandmark,
    #[error("ambiguous landmark: {0} candidate pairs")]
    Ambiguous(usize),
}

/// Find the landmark among `segments` (sensor frame) and return its apex pose.
pub fn detect_triangle<T: Real>(
    segments: &[LineSegment<T>],
    landmark: &TriangleLandmark<T>,
    tol: &DetectTolerances<T>,
) -> Result<Pose<T>, DetectError> {
    let mut found = Vec::new();
    for (i, a) in segments.iter().enumerate() {
        for b in &segments[i + 1..] {
            if let Some(p) = match_pair(a, b, landmark, tol) {
                found.push(p);
            }
        }
    }
    match found.len() {
        0 => Err(DetectError::NoLandmark),
        1 => Ok(found[0]),
        n => Err(DetectError::Ambiguous(n)),
    }
}

fn match_pair<T: Real>(
    a: &LineSegment<T>,
    b: &LineSegment<T>,
    landmark: &TriangleLandmark<T>,
    tol: &DetectTolerances<T>,
) -> Option<Pose<T>> {
    let apex = a.line.intersect(&b.line)?;
    let far = |s: &LineSegment<T>| -> Option<Point<T>> {
        let (near, far) = if s.start.distance(apex) <= s.end.distance(apex) {
            (s.start, s.end)
        } else {
            (s.end, s.start)
        };
        (near.distance(apex) <= tol.length).then_some(far)
    };
    let (fa, fb) = (far(a)?, far(b)?);
    let ua = Point::new(fa.x - apex.x, fa.y - apex.y);
    let ub = Point::new(fb.x - apex.x, fb.y - apex.y);
    let (la, lb) = (ua.norm(), ub.norm());
    if (la - landmark.side_length).abs() > tol.length
        || (lb - landmark.side_length).abs() > tol.length
    {
        return None;
    }
    let cos = ((ua.x * ub.x + ua.y * ub.y) / (la * lb))
        .max(-T::one())
        .min(T::one());
    if (cos.acos() - landmark.interior_angle()).abs() > tol.angle {
        return None;
    }
    let ox = -(ua.x / la + ub.x / lb);
    let oy = -(ua.y / la + ub.y / lb);
    // The V must open away from the sensor.
    if -(apex.x * ox + apex.y * oy) <= T::zero() {
        return None;
    }
    Some(Pose::new(apex.x, apex.y, oy.atan2(ox)))
}
