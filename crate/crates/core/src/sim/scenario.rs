//! Scenario documents: map, schedule, robot, battery, supervisors and the fault script.

use serde::{Deserialize, Serialize};

use super::battery::BatteryModel;
use super::fault::{Fault, FaultKind};
use super::map::{MapSpec, TopoMap};
use crate::docking::{DockingParams, TriangleLandmark};
use crate::metrics::DutySchedule;
use crate::monitor::{Band, MonitorKind, MonitorSpec};
use crate::orchestrator::{Configuration, ConfigurationSet, EntitySpec, ProcessDescriptor};
use crate::session::Supervisor;
use crate::time::NANOS_PER_DAY;

pub const NORMAL: &str = "normal";
pub const CHARGING: &str = "charging";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// Mean commanded speed while patrolling, m/s.
    pub patrol_speed: f64,
    /// Pause at every waypoint, s.
    pub dwell_s: f64,
    /// Speed of the straight back-up out of the dock and of move_back, m/s.
    pub backup_speed: f64,
    /// Length of the undocking back-up, m.
    pub undock_distance: f64,
    /// Range band in front of the dock where the docking manoeuvre starts, m.
    pub docking_range: [f64; 2],
    /// Lidar range noise during docking, m.
    pub docking_sigma: f64,
    /// Time after docking before charge contact is checked, s.
    pub contact_check_s: f64,
    /// Re-docking attempts when charge contact is missing.
    pub dock_retries: u32,
    /// Mean rate of people encounters while patrolling, per hour.
    pub people_per_hour: f64,
    /// Entities the base cannot drive without.
    pub critical: Vec<String>,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            patrol_speed: 0.283,
            dwell_s: 5.0,
            backup_speed: 0.15,
            undock_distance: 1.5,
            docking_range: [1.2, 1.8],
            docking_sigma: 0.005,
            contact_check_s: 30.0,
            dock_retries: 2,
            people_per_hour: 20.0,
            critical: [
                "base_driver",
                "laser",
                "localization",
                "navigation",
                "docking",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorModel {
    pub roster: Vec<Supervisor>,
    pub base_url: String,
    /// Delay until a notified supervisor opens the session, s.
    pub response_s: f64,
    /// Extra uniformly drawn delay on top of `response_s`, s.
    pub response_jitter_s: f64,
    /// Time from the first remote action to confirming the fix, s.
    pub handling_s: f64,
    /// Delay until someone notices a problem nobody was asked about, s.
    pub onsite_response_s: f64,
}

impl Default for SupervisorModel {
    fn default() -> Self {
        Self {
            roster: vec![
                Supervisor::new("operator-a", "http://127.0.0.1:9/hooks/operator-a"),
                Supervisor::new("operator-b", "http://127.0.0.1:9/hooks/operator-b"),
            ],
            base_url: "http://127.0.0.1:8080".into(),
            response_s: 240.0,
            response_jitter_s: 120.0,
            handling_s: 45.0,
            onsite_response_s: 1800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub seed: u64,
    pub days: u64,
    pub dt_s: f64,
    pub schedule: DutySchedule,
    pub map: MapSpec,
    pub robot: RobotParams,
    pub battery: BatteryModel,
    pub docking: DockingParams<f64>,
    pub landmark: TriangleLandmark<f64>,
    pub supervisors: SupervisorModel,
    pub configurations: ConfigurationSet,
    pub faults: Vec<Fault>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "unnamed".into(),
            description: String::new(),
            seed: 0,
            days: 1,
            dt_s: 1.0,
            schedule: DutySchedule::office_hours(),
            map: TopoMap::default_spec(),
            robot: RobotParams::default(),
            battery: BatteryModel::default(),
            docking: DockingParams::default(),
            landmark: TriangleLandmark::default(),
            supervisors: SupervisorModel::default(),
            configurations: default_configurations(),
            faults: Vec::new(),
        }
    }
}

/// `normal` for patrolling, `charging` for docking and charging.
pub fn default_configurations() -> ConfigurationSet {
    let entity = |id: &str| EntitySpec::new(id, ProcessDescriptor::new(format!("sim:{id}")));
    let clock = MonitorSpec::new(
        "clock_skew",
        "host",
        MonitorKind::ClockSkew {
            peer: "server".into(),
            band: Band::high_is_bad(50.0, 200.0).expect("static band"),
        },
    );
    let mut normal = Configuration::new(
        NORMAL,
        vec![
            entity("base_driver").with_output("odom", 50.0),
            entity("laser").with_output("scan", 25.0),
            entity("camera").with_output("image", 15.0),
            entity("localization").with_output("pose", 10.0),
            entity("navigation").with_output("cmd_vel", 10.0),
            entity("mask_detector").with_output("detections", 5.0),
        ],
    );
    normal.tree = Some("builtin:normal".into());
    normal.monitors = vec![
        clock.clone(),
        MonitorSpec::new(
            "localization",
            "localization",
            MonitorKind::Localization {
                band: Band::low_is_bad(0.6, 0.3).expect("static band"),
            },
        ),
        MonitorSpec::new(
            "navigation",
            "navigation",
            MonitorKind::Navigation {
                band: Band::high_is_bad(0.5, 0.9).expect("static band"),
            },
        ),
    ];
    let mut charging = Configuration::new(
        CHARGING,
        vec![
            entity("base_driver").with_output("odom", 50.0),
            entity("laser").with_output("scan", 25.0),
            entity("camera").with_output("image", 15.0),
            entity("docking").with_output("dock_state", 2.0),
        ],
    );
    charging.tree = Some("builtin:charging".into());
    charging.monitors = vec![clock];
    ConfigurationSet {
        initial: CHARGING.into(),
        configurations: vec![normal, charging],
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{0}")]
    Semantic(String),
}

impl ScenarioError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ScenarioError::Parse { line, .. } | ScenarioError::Invalid { line, .. } => Some(*line),
            ScenarioError::Semantic(_) => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    seed: u64,
    days: u64,
    #[serde(default = "one")]
    dt_s: f64,
    #[serde(default)]
    schedule: Option<DutySchedule>,
    #[serde(default)]
    map: Option<MapSpec>,
    #[serde(default)]
    robot: RobotParams,
    #[serde(default)]
    battery: BatteryModel,
    #[serde(default)]
    docking: DockingParams<f64>,
    #[serde(default)]
    landmark: Option<TriangleLandmark<f64>>,
    #[serde(default)]
    supervisors: SupervisorModel,
    #[serde(default)]
    configurations: Option<ConfigurationSet>,
    #[serde(default, rename = "fault")]
    faults: Vec<toml::Spanned<RawFault>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct RawFault {
    #[serde(default)]
    day: Option<u64>,
    #[serde(default)]
    time: Option<String>,
    #[serde(default)]
    at_s: Option<f64>,
    #[serde(default)]
    duration_s: Option<f64>,
    #[serde(flatten)]
    kind: FaultKind,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// `HH:MM` or `HH:MM:SS` to seconds after midnight.
pub fn parse_clock(s: &str) -> Option<f64> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return None;
    }
    let nums: Option<Vec<u32>> = parts.iter().map(|p| p.parse().ok()).collect();
    let nums = nums?;
    let (h, m, sec) = (nums[0], nums[1], nums.get(2).copied().unwrap_or(0));
    (h < 24 && m < 60 && sec < 60).then(|| f64::from(h * 3600 + m * 60 + sec))
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let mut faults = Vec::with_capacity(raw.faults.len());
        for spanned in raw.faults {
            let (line, _) = line_col(text, spanned.span().start);
            let f = spanned.into_inner();
            let invalid = |message: String| ScenarioError::Invalid { line, message };
            let at_s = match (f.at_s, f.day, f.time.as_deref()) {
                (Some(at), None, None) => at,
                (None, day, Some(time)) => {
                    let secs = parse_clock(time).ok_or_else(|| {
                        invalid(format!("bad time `{time}`, expected HH:MM[:SS]"))
                    })?;
                    day.unwrap_or(0) as f64 * 86_400.0 + secs
                }
                _ => {
                    return Err(invalid(
                        "a fault needs either `at_s` or `time` (with optional `day`)".into(),
                    ))
                }
            };
            let fault = Fault {
                at_s,
                duration_s: f.duration_s,
                kind: f.kind,
            };
            faults.push((line, fault));
        }
        let scenario = Scenario {
            name: raw.name,
            description: raw.description,
            seed: raw.seed,
            days: raw.days,
            dt_s: raw.dt_s,
            schedule: raw.schedule.unwrap_or_default(),
            map: raw.map.unwrap_or_else(TopoMap::default_spec),
            robot: raw.robot,
            battery: raw.battery,
            docking: raw.docking,
            landmark: raw.landmark.unwrap_or_default(),
            supervisors: raw.supervisors,
            configurations: raw.configurations.unwrap_or_else(default_configurations),
            faults: Vec::new(),
        };
        scenario.validate_header()?;
        let mut out = scenario;
        for (line, fault) in faults {
            out.validate_fault(&fault)
                .map_err(|message| ScenarioError::Invalid { line, message })?;
            out.faults.push(fault);
        }
        out.faults.sort_by(|a, b| a.at_s.total_cmp(&b.at_s));
        Ok(out)
    }

    pub fn horizon_s(&self) -> f64 {
        (self.days * NANOS_PER_DAY) as f64 / 1e9
    }

    fn validate_header(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Semantic(m));
        if self.days == 0 {
            return err("days must be at least 1".into());
        }
        if !(self.dt_s > 0.0 && self.dt_s <= 60.0) {
            return err("dt_s must lie in (0, 60]".into());
        }
        self.schedule
            .validate()
            .map_err(|e| ScenarioError::Semantic(e.to_string()))?;
        TopoMap::from_spec(&self.map).map_err(|e| ScenarioError::Semantic(format!("map: {e}")))?;
        self.battery
            .validate()
            .map_err(|e| ScenarioError::Semantic(e.to_string()))?;
        self.landmark
            .validate()
            .map_err(|e| ScenarioError::Semantic(format!("landmark: {e}")))?;
        self.configurations
            .validate()
            .map_err(|e| ScenarioError::Semantic(format!("configurations: {e}")))?;
        for name in [NORMAL, CHARGING] {
            if self.configurations.get(name).is_none() {
                return err(format!("configurations must define `{name}`"));
            }
        }
        let r = &self.robot;
        if !(r.patrol_speed > 0.0 && r.backup_speed > 0.0 && r.undock_distance > 0.0) {
            return err("robot speeds and undock distance must be positive".into());
        }
        if !(r.docking_range[0] > 0.0 && r.docking_range[0] <= r.docking_range[1]) {
            return err("robot.docking_range must be an increasing pair of positive ranges".into());
        }
        if !(r.dwell_s >= 0.0 && r.people_per_hour >= 0.0 && r.contact_check_s >= 0.0) {
            return err(
                "robot.dwell_s, people_per_hour and contact_check_s must not be negative".into(),
            );
        }
        let s = &self.supervisors;
        if !(s.response_s >= 0.0
            && s.response_jitter_s >= 0.0
            && s.handling_s >= 0.0
            && s.onsite_response_s >= 0.0)
        {
            return err("supervisor delays must not be negative".into());
        }
        Ok(())
    }

    fn entity_exists(&self, id: &str) -> bool {
        self.configurations
            .configurations
            .iter()
            .any(|c| c.entity(id).is_some())
    }

    fn channel_exists(&self, name: &str) -> bool {
        self.configurations
            .configurations
            .iter()
            .flat_map(|c| &c.entities)
            .any(|e| e.outputs.iter().any(|o| o.name == name))
    }

    /// Checks one fault against this scenario.
    pub fn validate_fault(&self, fault: &Fault) -> Result<(), String> {
        if !(fault.at_s >= 0.0 && fault.at_s < self.horizon_s()) {
            return Err(format!(
                "fault time {}s lies outside the {}-day horizon",
                fault.at_s, self.days
            ));
        }
        if fault.duration_s.is_some_and(|d| !(d > 0.0)) {
            return Err("duration_s must be positive".into());
        }
        match &fault.kind {
            FaultKind::ProcessCrash { target } | FaultKind::DeadlockRestartLoop { target, .. } => {
                if !self.entity_exists(target) {
                    return Err(format!("unknown target entity `{target}`"));
                }
            }
            FaultKind::RateDegrade { target, factor } => {
                if !self.channel_exists(target) {
                    return Err(format!("unknown target channel `{target}`"));
                }
                if !(*factor >= 0.0 && factor.is_finite()) {
                    return Err("rate factor must be non-negative".into());
                }
            }
            FaultKind::ClockDrift { offset_ms } => {
                if !offset_ms.is_finite() {
                    return Err("offset_ms must be finite".into());
                }
            }
            FaultKind::DockingSlip { linear_scale, .. } => {
                if !(*linear_scale > 0.0) {
                    return Err("linear_scale must be positive".into());
                }
            }
            FaultKind::LocalizationLoss { .. }
            | FaultKind::NavigationBlock { .. }
            | FaultKind::DockSignalLoss => {}
        }
        Ok(())
    }
}
