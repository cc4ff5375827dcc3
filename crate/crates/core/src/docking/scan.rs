//! 2D range scans: synthesis by ray casting and a plain-text fixture format.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::pose::{Point, Pose};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam<T> {
    pub angle: T,
    /// `None` for no return.
    pub range: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan<T> {
    pub beams: Vec<Beam<T>>,
    pub max_range: T,
    /// Range noise used to synthesize the scan; zero for recorded data.
    #[serde(default)]
    pub sigma: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScanError {
    #[error("beam angles must be strictly increasing (beam {0})")]
    Angles(usize),
    #[error("beam {index} range {range} outside (0, {max}]")]
    Range { index: usize, range: f64, max: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Laser geometry used for synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig<T> {
    pub angle_min: T,
    pub angle_max: T,
    pub beams: usize,
    pub max_range: T,
    pub sigma: T,
}

impl<T: Real> Default for ScanConfig<T> {
    /// 270° field of view at 0.25° resolution, 10 m range, noiseless.
    fn default() -> Self {
        Self {
            angle_min: T::lit(-135f64.to_radians()),
            angle_max: T::lit(135f64.to_radians()),
            beams: 1081,
            max_range: T::lit(10.0),
            sigma: T::zero(),
        }
    }
}

impl<T: Real> ScanConfig<T> {
    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn angle(&self, i: usize) -> T {
        if self.beams < 2 {
            return self.angle_min;
        }
        let step =
            (self.angle_max - self.angle_min) / T::from_usize(self.beams - 1).expect("beam count");
        self.angle_min + step * T::from_usize(i).expect("beam index")
    }
}

/// A straight obstacle edge in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge<T> {
    pub a: Point<T>,
    pub b: Point<T>,
}

impl<T: Real> Edge<T> {
    pub fn new(a: Point<T>, b: Point<T>) -> Self {
        Self { a, b }
    }

    /// Distance along the ray from `origin` in direction `angle` to this edge.
    pub fn ray_hit(&self, origin: Point<T>, angle: T) -> Option<T> {
        let (dy, dx) = angle.sin_cos();
        let ex = self.b.x - self.a.x;
        let ey = self.b.y - self.a.y;
        let denom = dx * ey - dy * ex;
        if denom.abs() < T::epsilon() {
            return None;
        }
        let wx = self.a.x - origin.x;
        let wy = self.a.y - origin.y;
        let t = (wx * ey - wy * ex) / denom;
        let u = (wx * dy - wy * dx) / denom;
        (t > T::zero() && u >= T::zero() && u <= T::one()).then_some(t)
    }
}

/// Cast every beam of `config` from `sensor` against `edges`.
pub fn synthesize_scan<T: Real, R: Rng + ?Sized>(
    sensor: Pose<T>,
    edges: &[Edge<T>],
    config: &ScanConfig<T>,
    rng: &mut R,
) -> Scan<T> {
    let sigma = config.sigma.to_f64_lossy();
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    let beams = (0..config.beams)
        .map(|i| {
            let angle = config.angle(i);
            let world = sensor.theta + angle;
            let hit = edges
                .iter()
                .filter_map(|e| e.ray_hit(sensor.position(), world))
                .fold(None, |best: Option<T>, t| {
                    Some(best.map_or(t, |b| b.min(t)))
                });
            let range = hit.and_then(|r| {
                let r = match &noise {
                    Some(n) => r + T::lit(n.sample(rng)),
                    None => r,
                };
                (r > T::zero() && r <= config.max_range).then_some(r)
            });
            Beam { angle, range }
        })
        .collect();
    Scan {
        beams,
        max_range: config.max_range,
        sigma: config.sigma,
    }
}

impl<T: Real> Scan<T> {
    pub fn validate(&self) -> Result<(), ScanError> {
        for (i, w) in self.beams.windows(2).enumerate() {
            if !(w[1].angle > w[0].angle) {
                return Err(ScanError::Angles(i + 1));
            }
        }
        for (index, b) in self.beams.iter().enumerate() {
            if let Some(r) = b.range {
                if !(r > T::zero() && r <= self.max_range) {
                    return Err(ScanError::Range {
                        index,
                        range: r.to_f64_lossy(),
                        max: self.max_range.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Cartesian returns in the sensor frame, `None` where a beam saw nothing.
    pub fn points(&self) -> Vec<Option<Point<T>>> {
        self.beams
            .iter()
            .map(|b| {
                b.range.map(|r| {
                    let (s, c) = b.angle.sin_cos();
                    Point::new(r * c, r * s)
                })
            })
            .collect()
    }

    /// Fixture format: a header line, then `angle range` per beam with `-` for no return.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# scan max_range={} sigma={}\n",
            self.max_range.to_f64_lossy(),
            self.sigma.to_f64_lossy()
        );
        for b in &self.beams {
            match b.range {
                Some(r) => writeln!(out, "{:.9} {:.9}", b.angle.to_f64_lossy(), r.to_f64_lossy()),
                None => writeln!(out, "{:.9} -", b.angle.to_f64_lossy()),
            }
            .expect("write to string");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ScanError> {
        let mut max_range = None;
        let mut sigma = T::zero();
        let mut beams = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| ScanError::Parse { line, message };
            let body = raw.trim();
            if let Some(header) = body.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    if let Some(v) = kv.strip_prefix("max_range=") {
                        max_range = Some(parse_num::<T>(v).map_err(err)?);
                    } else if let Some(v) = kv.strip_prefix("sigma=") {
                        sigma = parse_num::<T>(v).map_err(err)?;
                    }
                }
                continue;
            }
            if body.is_empty() {
                continue;
            }
            let mut it = body.split_whitespace();
            let (Some(a), Some(r), None) = (it.next(), it.next(), it.next()) else {
                return Err(err(format!("expected `angle range`, got `{body}`")));
            };
            let angle = parse_num::<T>(a).map_err(err)?;
            let range = if r == "-" {
                None
            } else {
                Some(parse_num::<T>(r).map_err(err)?)
            };
            beams.push(Beam { angle, range });
        }
        let max_range = max_range.ok_or(ScanError::Parse {
            line: 1,
            message: "missing `# scan max_range=...` header".into(),
        })?;
        let scan = Scan {
            beams,
            max_range,
            sigma,
        };
        scan.validate()?;
        Ok(scan)
    }
}

fn parse_num<T: Real>(s: &str) -> Result<T, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(T::lit)
        .ok_or_else(|| format!("invalid number `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wall() -> Vec<Edge<f64>> {
        vec![Edge::new(Point::new(2.0, -3.0), Point::new(2.0, 3.0))]
    }

    #[test]
    fn straight_ahead_hits_wall_at_its_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scan = synthesize_scan(Pose::origin(), &wall(), &ScanConfig::default(), &mut rng);
        let mid = &scan.beams[540];
        assert!(mid.angle.abs() < 1e-12);
        assert!((mid.range.unwrap() - 2.0).abs() < 1e-12);
        // Beams pointing backwards see nothing.
        assert!(scan.beams[0].range.is_none());
        scan.validate().unwrap();
    }

    #[test]
    fn text_round_trip_and_line_numbers() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ScanConfig {
            beams: 21,
            ..ScanConfig::default()
        };
        let scan = synthesize_scan(Pose::origin(), &wall(), &cfg, &mut rng);
        let back: Scan<f64> = Scan::from_text(&scan.to_text()).unwrap();
        assert_eq!(back.beams.len(), 21);
        for (a, b) in scan.beams.iter().zip(&back.beams) {
            assert!((a.angle - b.angle).abs() < 1e-8);
            assert_eq!(a.range.is_some(), b.range.is_some());
        }
        let bad = "# scan max_range=10\n0.0 1.0\n0.1 x\n";
        assert_eq!(
            Scan::<f64>::from_text(bad),
            Err(ScanError::Parse {
                line: 3,
                message: "invalid number `x`".into()
            })
        );
    }

    #[test]
    fn decreasing_angles_rejected() {
        let scan = Scan {
            beams: vec![
                Beam {
                    angle: 0.1,
                    range: None,
                },
                Beam {
                    angle: 0.0,
                    range: None,
                },
            ],
            max_range: 5.0,
            sigma: 0.0,
        };
        assert_eq!(scan.validate(), Err(ScanError::Angles(1)));
    }
}
