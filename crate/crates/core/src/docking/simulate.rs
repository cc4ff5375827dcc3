//! Closed-loop docking: detect the landmark, plan, and track on a differential drive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dubins::{plan_dubins, DubinsError, Path};
use super::landmark::{detect_triangle, DetectError, DetectTolerances, TriangleLandmark};
use super::pose::Pose;
use super::pursuit::{integrate_unicycle, pure_pursuit_step, PurePursuitState, PursuitCommand};
use super::scan::{synthesize_scan, ScanConfig};
use super::segments::extract_segments;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DockingParams<T> {
    pub turn_radius: T,
    pub lookahead: T,
    pub speed: T,
    pub goal_tolerance: T,
    /// Length of the final straight approach into the dock.
    pub approach_distance: T,
    pub dt: T,
    pub max_time_s: T,
    pub split_threshold: T,
    pub tolerances: DetectTolerances<T>,
    pub scan: ScanConfig<T>,
    /// Docked means final position error below this.
    pub position_tolerance: T,
    pub heading_tolerance: T,
    /// Wall on either side of the landmark, for synthesized scans.
    pub wall_extent: T,
}

impl<T: Real> Default for DockingParams<T> {
    fn default() -> Self {
        Self {
            turn_radius: T::lit(0.3),
            lookahead: T::lit(0.25),
            speed: T::lit(0.15),
            goal_tolerance: T::lit(0.005),
            approach_distance: T::lit(0.6),
            dt: T::lit(0.02),
            max_time_s: T::lit(120.0),
            split_threshold: T::lit(0.02),
            tolerances: DetectTolerances::default(),
            scan: ScanConfig::default(),
            position_tolerance: T::lit(0.02),
            heading_tolerance: T::lit(3f64.to_radians()),
            wall_extent: T::lit(0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DockingFault<T> {
    /// The landmark is never detected.
    DetectionDropout,
    /// Wheel slip: the base turns `angular_bias` rad/s more than commanded and
    /// covers `linear_scale` times the commanded distance.
    WheelSlip { angular_bias: T, linear_scale: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DockingFailure {
    NoLandmark,
    AmbiguousLandmark,
    LostPath,
    Timeout,
    Misaligned {
        position_error: f64,
        heading_error: f64,
    },
    Planning,
}

impl std::fmt::Display for DockingFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DockingFailure::NoLandmark => f.write_str("no landmark"),
            DockingFailure::AmbiguousLandmark => f.write_str("ambiguous landmark"),
            DockingFailure::LostPath => f.write_str("lost path"),
            DockingFailure::Timeout => f.write_str("timeout"),
            DockingFailure::Misaligned {
                position_error,
                heading_error,
            } => write!(
                f,
                "misaligned ({position_error:.3} m, {:.2} deg)",
                heading_error.to_degrees()
            ),
            DockingFailure::Planning => f.write_str("planning failed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DockingOutcome<T> {
    Docked {
        position_error: T,
        heading_error: T,
        time_s: T,
        distance_m: T,
    },
    Failed {
        reason: DockingFailure,
        time_s: T,
        distance_m: T,
    },
}

impl<T: Real> DockingOutcome<T> {
    pub fn is_docked(&self) -> bool {
        matches!(self, DockingOutcome::Docked { .. })
    }

    pub fn time_s(&self) -> T {
        match *self {
            DockingOutcome::Docked { time_s, .. } | DockingOutcome::Failed { time_s, .. } => time_s,
        }
    }

    pub fn distance_m(&self) -> T {
        match *self {
            DockingOutcome::Docked { distance_m, .. }
            | DockingOutcome::Failed { distance_m, .. } => distance_m,
        }
    }
}

/// Path from the robot (at the odometry origin) to the dock, given the apex pose
/// in the robot frame: a Dubins path to the approach pose, then straight in.
pub fn plan_docking_path<T: Real>(
    apex_in_robot: Pose<T>,
    landmark: &TriangleLandmark<T>,
    params: &DockingParams<T>,
) -> Result<Path<T>, DubinsError> {
    let dock = landmark.dock_pose(apex_in_robot);
    let approach = dock.advanced(-params.approach_distance);
    let mut path = plan_dubins(Pose::origin(), approach, params.turn_radius)?.to_path();
    path.push_straight(params.approach_distance);
    Ok(path)
}

/// Run one docking attempt from `initial` toward the landmark whose apex sits at `station`.
pub fn simulate_docking<T: Real, R: Rng + ?Sized>(
    initial: Pose<T>,
    station: Pose<T>,
    landmark: &TriangleLandmark<T>,
    params: &DockingParams<T>,
    fault: Option<&DockingFault<T>>,
    rng: &mut R,
) -> DockingOutcome<T> {
    let failed = |reason, time_s, distance_m| DockingOutcome::Failed {
        reason,
        time_s,
        distance_m,
    };
    let apex = if matches!(fault, Some(DockingFault::DetectionDropout)) {
        Err(DetectError::NoLandmark)
    } else {
        let edges = landmark.station_edges(station, params.wall_extent);
        let scan = synthesize_scan(initial, &edges, &params.scan, rng);
        let segments = extract_segments(&scan, params.split_threshold);
        detect_triangle(&segments, landmark, &params.tolerances)
    };
    let apex = match apex {
        Ok(a) => a,
        Err(DetectError::NoLandmark) => {
            return failed(DockingFailure::NoLandmark, T::zero(), T::zero())
        }
        Err(DetectError::Ambiguous(_)) => {
            return failed(DockingFailure::AmbiguousLandmark, T::zero(), T::zero())
        }
    };
    let Ok(path) = plan_docking_path(apex, landmark, params) else {
        return failed(DockingFailure::Planning, T::zero(), T::zero());
    };

    let (angular_bias, linear_scale) = match fault {
        Some(DockingFault::WheelSlip {
            angular_bias,
            linear_scale,
        }) => (*angular_bias, *linear_scale),
        _ => (T::zero(), T::one()),
    };
    let mut state = PurePursuitState::new(params.lookahead, params.speed, params.goal_tolerance);
    // Odometry integrates commands; the true pose also sees the slip.
    let mut odom = Pose::origin();
    let mut truth = initial;
    let mut t = T::zero();
    let mut distance = T::zero();
    loop {
        if t > params.max_time_s {
            return failed(DockingFailure::Timeout, t, distance);
        }
        match pure_pursuit_step(odom, &path, &mut state) {
            Err(_) => return failed(DockingFailure::LostPath, t, distance),
            Ok(PursuitCommand::Done) => break,
            Ok(PursuitCommand::Drive { v, omega }) => {
                odom = integrate_unicycle(odom, v, omega, params.dt);
                truth =
                    integrate_unicycle(truth, v * linear_scale, omega + angular_bias, params.dt);
                distance = distance + (v * linear_scale * params.dt).abs();
                t = t + params.dt;
            }
        }
    }
    let target = landmark.dock_pose(station);
    let position_error = truth.distance(target);
    let heading_error = truth.heading_error(target);
    if position_error < params.position_tolerance && heading_error < params.heading_tolerance {
        DockingOutcome::Docked {
            position_error,
            heading_error,
            time_s: t,
            distance_m: distance,
        }
    } else {
        failed(
            DockingFailure::Misaligned {
                position_error: position_error.to_f64_lossy(),
                heading_error: heading_error.to_f64_lossy(),
            },
            t,
            distance,
        )
    }
}

/// Initial pose `range` metres in front of the dock, `bearing` off its axis, with
/// heading perturbed by `yaw` from facing the dock.
pub fn frontal_pose<T: Real>(
    landmark: &TriangleLandmark<T>,
    station: Pose<T>,
    range: T,
    bearing: T,
    yaw: T,
) -> Pose<T> {
    let dock = landmark.dock_pose(station);
    // The dock faces the apex; "in front" is behind the docked robot.
    let out = dock.theta + T::PI() + bearing;
    let (s, c) = out.sin_cos();
    let x = dock.x + range * c;
    let y = dock.y + range * s;
    Pose::new(x, y, (dock.y - y).atan2(dock.x - x) + yaw)
}

/// Region of docking start poses in front of the station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApproachCone<T> {
    pub min_range: T,
    pub max_range: T,
    /// Largest angle off the dock axis, rad.
    pub half_angle: T,
    /// Largest heading deviation from facing the dock, rad.
    pub max_yaw: T,
}

impl<T: Real> Default for ApproachCone<T> {
    /// 1 to 3 m out, within 30° of the axis, heading within 10° of the dock.
    fn default() -> Self {
        Self {
            min_range: T::one(),
            max_range: T::lit(3.0),
            half_angle: T::lit(30f64.to_radians()),
            max_yaw: T::lit(10f64.to_radians()),
        }
    }
}

impl<T: Real> ApproachCone<T> {
    /// Uniform draw of range, bearing and heading perturbation.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        landmark: &TriangleLandmark<T>,
        station: Pose<T>,
        rng: &mut R,
    ) -> Pose<T> {
        let mut uniform = |lo: T, hi: T| lo + (hi - lo) * T::lit(rng.random::<f64>());
        let range = uniform(self.min_range, self.max_range);
        let bearing = uniform(-self.half_angle, self.half_angle);
        let yaw = uniform(-self.max_yaw, self.max_yaw);
        frontal_pose(landmark, station, range, bearing, yaw)
    }
}
