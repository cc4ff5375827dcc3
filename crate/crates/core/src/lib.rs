//! Long-term-autonomy supervision for a mobile service robot.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbiter;
pub mod docking;
pub mod metrics;
pub mod monitor;
pub mod orchestrator;
pub mod scalar;
pub mod session;
pub mod sim;
pub mod stack;
pub mod time;

/// Double-precision instances of the generic geometry types.
pub type Pose2D = docking::Pose<f64>;
pub type Point2D = docking::Point<f64>;
pub type DubinsPath2D = docking::DubinsPath<f64>;
pub type Landmark = docking::TriangleLandmark<f64>;
pub type DockingConfig = docking::DockingParams<f64>;
pub type LaserScan = docking::Scan<f64>;
