//! Landmark-guided docking: scan synthesis, line extraction, landmark detection,
//! Dubins planning and pure-pursuit tracking. Everything is generic over [`Real`].
//!
//! [`Real`]: crate::scalar::Real

mod dubins;
mod landmark;
mod pose;
mod pursuit;
mod scan;
mod segments;
mod simulate;

pub use dubins::{
    dubins_word, plan_dubins, DubinsError, DubinsPath, DubinsWord, Path, PathSegment, SegmentKind,
};
pub use landmark::{
    detect_triangle, DetectError, DetectTolerances, LandmarkError, TriangleLandmark,
};
pub use pose::{Point, Pose};
pub use pursuit::{
    integrate_unicycle, pure_pursuit_step, pursuit_omega, PurePursuitState, PursuitCommand,
    PursuitError,
};
pub use scan::{synthesize_scan, Beam, Edge, Scan, ScanConfig, ScanError};
pub use segments::{
    extract_segments, extract_segments_with, fit_line, Line, LineSegment, SegmentParams,
};
pub use simulate::{
    frontal_pose, plan_docking_path, simulate_docking, ApproachCone, DockingFailure, DockingFault,
    DockingOutcome, DockingParams,
};
