//! Split-and-merge line extraction.

use serde::{Deserialize, Serialize};

use super::pose::Point;
use super::scan::Scan;
use crate::scalar::Real;

/// Infinite line in normal form: `x cos(alpha) + y sin(alpha) = rho`, `rho >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub alpha: T,
    pub rho: T,
}

impl<T: Real> Line<T> {
    pub fn distance(&self, p: Point<T>) -> T {
        (p.x * self.alpha.cos() + p.y * self.alpha.sin() - self.rho).abs()
    }

    pub fn project(&self, p: Point<T>) -> Point<T> {
        let (s, c) = self.alpha.sin_cos();
        let d = p.x * c + p.y * s - self.rho;
        Point::new(p.x - d * c, p.y - d * s)
    }

    /// Intersection point, `None` for (near-)parallel lines.
    pub fn intersect(&self, other: &Line<T>) -> Option<Point<T>> {
        let (s1, c1) = self.alpha.sin_cos();
        let (s2, c2) = other.alpha.sin_cos();
        let det = c1 * s2 - s1 * c2;
        if det.abs() < T::lit(1e-9) {
            return None;
        }
        Some(Point::new(
            (self.rho * s2 - other.rho * s1) / det,
            (c1 * other.rho - c2 * self.rho) / det,
        ))
    }
}

/// Total least squares fit. Needs at least two distinct points.
pub fn fit_line<T: Real>(points: &[Point<T>]) -> Option<Line<T>> {
    if points.len() < 2 {
        return None;
    }
    let n = T::from_usize(points.len()).expect("point count");
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(ax, ay), p| (ax + p.x, ay + p.y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for p in points {
        let dx = p.x - mx;
        let dy = p.y - my;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx + syy <= T::zero() {
        return None;
    }
    let two = T::lit(2.0);
    let mut alpha = T::lit(0.5) * (-two * sxy).atan2(syy - sxx);
    let mut rho = mx * alpha.cos() + my * alpha.sin();
    if rho < T::zero() {
        rho = -rho;
        alpha = alpha + T::PI();
    }
    Some(Line { alpha, rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment<T> {
    pub start: Point<T>,
    pub end: Point<T>,
    pub line: Line<T>,
    pub points: usize,
}

impl<T: Real> LineSegment<T> {
    pub fn length(&self) -> T {
        self.start.distance(self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams<T> {
    /// Maximum point-to-segment distance.
    pub split_threshold: T,
    /// Consecutive returns farther apart than this start a new cluster.
    pub break_distance: T,
    pub min_points: usize,
}

impl<T: Real> SegmentParams<T> {
    pub fn new(split_threshold: T) -> Self {
        Self {
            split_threshold,
            break_distance: T::lit(0.15),
            min_points: 4,
        }
    }
}

pub fn extract_segments<T: Real>(scan: &Scan<T>, split_threshold: T) -> Vec<LineSegment<T>> {
    extract_segments_with(scan, &SegmentParams::new(split_threshold))
}

pub fn extract_segments_with<T: Real>(
    scan: &Scan<T>,
    params: &SegmentParams<T>,
) -> Vec<LineSegment<T>> {
    let mut out = Vec::new();
    for cluster in clusters(scan, params.break_distance) {
        out.extend(segment_cluster(&cluster, params));
    }
    out
}

fn clusters<T: Real>(scan: &Scan<T>, break_distance: T) -> Vec<Vec<Point<T>>> {
    let mut out: Vec<Vec<Point<T>>> = Vec::new();
    let mut cur: Vec<Point<T>> = Vec::new();
    for p in scan.points() {
        match p {
            Some(p) => {
                if cur.last().is_some_and(|q| q.distance(p) > break_distance) {
                    out.push(std::mem::take(&mut cur));
                }
                cur.push(p);
            }
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out.retain(|c| c.len() >= 2);
    out
}

fn chord_distance<T: Real>(a: Point<T>, b: Point<T>, p: Point<T>) -> T {
    let len = a.distance(b);
    if len <= T::zero() {
        return a.distance(p);
    }
    ((b.x - a.x) * (a.y - p.y) - (a.x - p.x) * (b.y - a.y)).abs() / len
}

fn max_residual<T: Real>(pts: &[Point<T>], line: &Line<T>) -> T {
    pts.iter()
        .map(|p| line.distance(*p))
        .fold(T::zero(), T::max)
}

/// Points within the split threshold of both lines near a corner go to the
/// line they fit better.
fn refine_boundary<T: Real>(pts: &[Point<T>], leaves: &mut [(usize, usize)], i: usize) {
    for _ in 0..8 {
        let ((a, e), (s, b)) = (leaves[i], leaves[i + 1]);
        if s != e + 1 || e < a + 2 || b < s + 2 {
            return;
        }
        let (Some(l), Some(r)) = (fit_line(&pts[a..=e]), fit_line(&pts[s..=b])) else {
            return;
        };
        if r.distance(pts[e]) < l.distance(pts[e]) {
            leaves[i].1 = e - 1;
            leaves[i + 1].0 = e;
        } else if l.distance(pts[s]) < r.distance(pts[s]) {
            leaves[i].1 = s;
            leaves[i + 1].0 = s + 1;
        } else {
            return;
        }
    }
}

fn segment_cluster<T: Real>(pts: &[Point<T>], params: &SegmentParams<T>) -> Vec<LineSegment<T>> {
    // Split: inclusive index ranges, adjacent ones share their boundary point.
    let mut leaves = Vec::new();
    let mut stack = vec![(0, pts.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        let (k, d) = (a + 1..b)
            .map(|i| (i, chord_distance(pts[a], pts[b], pts[i])))
            .fold(
                (a, T::zero()),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if d > params.split_threshold && k > a && k < b {
            stack.push((k, b));
            stack.push((a, k));
        } else {
            leaves.push((a, b));
        }
    }

    // A shared corner point belongs to whichever neighbour's line it fits better.
    for i in 0..leaves.len().saturating_sub(1) {
        let (a, k) = leaves[i];
        let (k2, b) = leaves[i + 1];
        if k != k2 {
            continue;
        }
        let left = (k > a + 1).then(|| fit_line(&pts[a..k])).flatten();
        let right = (b > k + 1).then(|| fit_line(&pts[k + 1..=b])).flatten();
        match (left, right) {
            (Some(l), Some(r)) if l.distance(pts[k]) <= r.distance(pts[k]) => {
                leaves[i + 1].0 = k + 1
            }
            (Some(_), Some(_)) | (None, Some(_)) => leaves[i].1 = k - 1,
            (Some(_), None) => leaves[i + 1].0 = k + 1,
            (None, None) => {}
        }
    }
    for i in 0..leaves.len().saturating_sub(1) {
        refine_boundary(pts, &mut leaves, i);
    }
    leaves.retain(|(a, b)| b >= a);

    // Merge neighbours whose union is still a line.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for leaf in leaves {
        if let Some(last) = merged.last_mut() {
            let union = &pts[last.0..=leaf.1];
            if fit_line(union).is_some_and(|l| max_residual(union, &l) <= params.split_threshold) {
                last.1 = leaf.1;
                continue;
            }
        }
        merged.push(leaf);
    }

    let mut out: Vec<(usize, LineSegment<T>)> = merged
        .into_iter()
        .filter(|(a, b)| b + 1 - a >= params.min_points.max(2))
        .filter_map(|(a, b)| {
            let line = fit_line(&pts[a..=b])?;
            Some((
                b,
                LineSegment {
                    start: line.project(pts[a]),
                    end: line.project(pts[b]),
                    line,
                    points: b + 1 - a,
                },
            ))
        })
        .collect();

    // Neighbouring segments with no returns between them meet at a corner.
    for i in 1..out.len() {
        let (prev_end, prev) = out[i - 1];
        let (end, cur) = out[i];
        if end + 1 - cur.points != prev_end + 1 {
            continue;
        }
        if let Some(corner) = prev.line.intersect(&cur.line) {
            if corner.distance(prev.end) <= params.break_distance
                && corner.distance(cur.start) <= params.break_distance
            {
                out[i - 1].1.end = corner;
                out[i].1.start = corner;
            }
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docking::{synthesize_scan, Edge, Pose, ScanConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scan_of(edges: &[Edge<f64>]) -> Scan<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        synthesize_scan(Pose::origin(), edges, &ScanConfig::default(), &mut rng)
    }

    #[test]
    fn single_wall_is_one_segment() {
        let a = Point::new(1.5, -1.0);
        let b = Point::new(2.5, 1.0);
        let segs = extract_segments(&scan_of(&[Edge::new(a, b)]), 0.01);
        assert_eq!(segs.len(), 1);
        let s = segs[0];
        // Endpoints are the outermost returns, at most one beam spacing short of the wall ends.
        let spacing = 2.5f64.hypot(1.0) * 0.25f64.to_radians() * 2.0;
        assert!(s.start.distance(a) < spacing && s.end.distance(b) < spacing);
        let wall = fit_line(&[a, b]).unwrap();
        assert!(wall.distance(s.start) < 1e-9 && wall.distance(s.end) < 1e-9);
    }

    #[test]
    fn corner_is_two_segments_meeting_at_the_corner() {
        let c = Point::new(2.0, 0.5);
        let edges = [
            Edge::new(Point::new(2.0, -1.5), c),
            Edge::new(c, Point::new(0.5, 0.5)),
        ];
        let segs = extract_segments(&scan_of(&edges), 0.01);
        assert_eq!(segs.len(), 2);
        let corner = segs[0].line.intersect(&segs[1].line).unwrap();
        assert!(corner.distance(c) < 1e-9);
        assert!(segs[0].end.distance(c) < 0.01);
        assert!(segs[1].start.distance(c) < 0.01);
    }

    #[test]
    fn empty_scan_has_no_segments() {
        let scan = Scan::<f64> {
            beams: vec![],
            max_range: 10.0,
            sigma: 0.0,
        };
        assert!(extract_segments(&scan, 0.01).is_empty());
        assert!(extract_segments(&scan_of(&[]), 0.01).is_empty());
    }
}
