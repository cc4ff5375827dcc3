//! Deterministic simulation of a patrol deployment under supervision.

mod battery;
mod engine;
mod fault;
mod map;
mod scenario;

pub use battery::{Activity, BatteryError, BatteryModel};
pub use engine::{run, RobotState, SimError, Simulator};
pub use fault::{Fault, FaultKind, LocalizationFix, NavigationFix};
pub use map::{next_waypoint, EdgeData, MapEdge, MapError, MapNode, MapSpec, NodeKind, TopoMap};
pub use scenario::{
    default_configurations, parse_clock, RobotParams, Scenario, ScenarioError, SupervisorModel,
    CHARGING, NORMAL,
};
