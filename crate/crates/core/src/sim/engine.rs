//! Discrete-time simulation of the robot around the supervision stack.
//!
//! Every step of `dt` runs, in order: fault activation, due chores of people,
//! the orchestrator, running recoveries, monitor sampling and one arbiter tick,
//! then the robot itself (tasks, mode, motion, battery).

use std::collections::BTreeMap;
use std::sync::Arc;

use petgraph::graph::NodeIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::battery::Activity;
use super::fault::{FaultKind, LocalizationFix, NavigationFix};
use super::map::{next_waypoint, TopoMap};
use super::scenario::{Scenario, CHARGING, NORMAL};
use crate::arbiter::{Dispatch, ErrorCategory, RecordingSink, RecoveryKind, RunningAction};
use crate::docking::{frontal_pose, simulate_docking, DockingFault, DockingOutcome, Pose};
use crate::metrics::{round6, round_pose, ActionOutcome, Event, EventKind, EventLog, RobotMode};
use crate::monitor::{
    AggregatedStatus, MonitorKind, MonitorLevel, MonitorReport, MonitorSpec, Unit,
};
use crate::orchestrator::{FakeRunner, OrchestratorEvent, ProcessState};
use crate::session::{Handled, Notification, SessionAction, SessionError, SessionManager};
use crate::stack::{StackError, SupervisionStack};
use crate::time::{secs, to_secs, Nanos, NANOS_PER_SEC};

const LIVENESS_TIMEOUT_S: f64 = 3.0;
const RATE_PERIOD_S: f64 = 5.0;
const CLOCK_PERIOD_S: f64 = 30.0;
const MOVE_BACK_SPEED: f64 = 0.1;
const ACTION_DEADLINE_S: f64 = 60.0;
const LOCALIZED: f64 = 0.95;
const LOST: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("fault rejected: {0}")]
    Fault(String),
}

/// What the robot is doing, independent of supervision.
#[derive(Debug, Clone, PartialEq)]
enum Task {
    Docked,
    /// Waiting for a configuration switch before the next move.
    Switching {
        to: &'static str,
        then: AfterSwitch,
    },
    Leg(Leg),
    Dwell {
        at: NodeIndex,
        until: Nanos,
    },
    Docking {
        until: Nanos,
        outcome: DockingOutcome<f64>,
    },
    /// Backing out of the dock for another attempt.
    BackingOut {
        until: Nanos,
    },
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AfterSwitch {
    Undock,
    Dock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Undock,
    Patrol,
    ToDock,
}

#[derive(Debug, Clone, PartialEq)]
struct Leg {
    from: NodeIndex,
    to: NodeIndex,
    length: f64,
    speed: f64,
    travelled: f64,
    purpose: Purpose,
    /// Nodes still to visit after `to`.
    route: Vec<NodeIndex>,
}

/// Observable robot state.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub pose: Pose<f64>,
    pub battery: f64,
    /// Mode as last logged.
    pub mode: RobotMode,
    pub odometer_m: f64,
    pub docked: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct ActiveFault {
    kind: FaultKind,
    duration: Option<Nanos>,
    until: Option<Nanos>,
    live: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Chore {
    Attend {
        session: u64,
        category: ErrorCategory,
    },
    Confirm {
        session: u64,
        supervisor: String,
    },
    ResetDock,
    SwitchOn,
}

#[derive(Debug, Clone)]
struct Exec {
    running: RunningAction,
    until: Option<Nanos>,
    deadline: Nanos,
}

#[derive(Debug, Default, Clone, Copy)]
struct MotionAccum {
    distance_m: f64,
    moving_s: f64,
    mode: Option<RobotMode>,
}

pub struct Simulator {
    scenario: Scenario,
    map: TopoMap,
    stack: SupervisionStack<FakeRunner>,
    dt: Nanos,
    horizon: Nanos,
    t: Nanos,
    log: EventLog,
    step_start: usize,

    route_rng: ChaCha8Rng,
    dock_rng: ChaCha8Rng,
    people_rng: ChaCha8Rng,
    supervisor_rng: ChaCha8Rng,

    robot: RobotState,
    task: Task,
    previous_node: Option<NodeIndex>,
    dock_retries_left: u32,
    contact_check_at: Option<Nanos>,
    reset_requested: bool,
    exposure_s: f64,
    motion: MotionAccum,

    next_fault: usize,
    faults: Vec<ActiveFault>,
    clock_offset_ms: f64,
    up_since: BTreeMap<String, Nanos>,

    exec: Option<Exec>,
    chores: Vec<(Nanos, Chore)>,
    next_rate: Nanos,
    next_clock: Nanos,
    force_sample: bool,
    logged_levels: BTreeMap<Arc<str>, MonitorLevel>,

    remote: bool,
    notifications: Vec<Notification>,
    last_status: Option<AggregatedStatus>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("scenario", &self.scenario.name)
            .field("t", &self.t)
            .field("robot", &self.robot)
            .finish()
    }
}

fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    rng
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let map =
            TopoMap::from_spec(&scenario.map).map_err(|e| SimError::Scenario(e.to_string()))?;
        let mut set = scenario.configurations.clone();
        set.initial = CHARGING.to_string();
        let sessions = SessionManager::new(
            scenario.supervisors.roster.clone(),
            scenario.supervisors.base_url.clone(),
        );
        let stack = SupervisionStack::new(set, FakeRunner::quiet(), sessions)?;
        let dock = map.node(map.dock()).pose();
        let robot = RobotState {
            pose: dock,
            battery: scenario.battery.initial,
            mode: RobotMode::Off,
            odometer_m: 0.0,
            docked: true,
        };
        let seed = scenario.seed;
        let dt = secs(scenario.dt_s).max(1);
        let horizon = scenario.days * crate::time::NANOS_PER_DAY;
        let retries = scenario.robot.dock_retries;
        let mut sim = Self {
            map,
            stack,
            dt,
            horizon,
            t: 0,
            log: EventLog::new(),
            step_start: 0,
            route_rng: stream(seed, 1),
            dock_rng: stream(seed, 2),
            people_rng: stream(seed, 3),
            supervisor_rng: stream(seed, 4),
            robot,
            task: Task::Docked,
            previous_node: None,
            dock_retries_left: retries,
            contact_check_at: None,
            reset_requested: false,
            exposure_s: 0.0,
            motion: MotionAccum::default(),
            next_fault: 0,
            faults: Vec::new(),
            clock_offset_ms: 0.0,
            up_since: BTreeMap::new(),
            exec: None,
            chores: Vec::new(),
            next_rate: 0,
            next_clock: 0,
            force_sample: true,
            logged_levels: BTreeMap::new(),
            remote: false,
            notifications: Vec::new(),
            last_status: None,
            scenario,
        };
        sim.emit(EventKind::ModeChange {
            from: RobotMode::Off,
            to: RobotMode::Charging,
            pose: Some(round_pose(dock)),
        });
        sim.robot.mode = RobotMode::Charging;
        Ok(sim)
    }

    pub fn now(&self) -> Nanos {
        self.t
    }

    pub fn horizon(&self) -> Nanos {
        self.horizon
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.horizon
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn stack(&self) -> &SupervisionStack<FakeRunner> {
        &self.stack
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// Leave escalations to people acting through [`Simulator::supervisor_action`]
    /// instead of the simulated supervisors.
    pub fn with_remote_supervisors(mut self) -> Self {
        self.remote = true;
        self
    }

    /// Monitor snapshot of the latest tick; kept only with remote supervisors.
    pub fn status(&self) -> Option<&AggregatedStatus> {
        self.last_status.as_ref()
    }

    /// Notifications produced since the last call.
    pub fn drain_notifications(&mut self) -> Vec<Notification> {
        std::mem::take(&mut self.notifications)
    }

    /// Apply a supervisor's action to an open session, with its effect on the robot:
    /// a pose fixes lost localization, teleop frees a blocked robot, confirming the
    /// fix ends the escalation.
    pub fn supervisor_action(
        &mut self,
        session: u64,
        supervisor: &str,
        action: SessionAction,
    ) -> Result<Handled, SessionError> {
        let now = self.t;
        let class = self
            .stack
            .sessions
            .get(session)
            .map(|s| s.class.clone())
            .ok_or(SessionError::NotFound(session))?;
        let handled = self
            .stack
            .sessions
            .handle_action(session, supervisor, action, now)?;
        for e in handled.events.clone() {
            self.emit(e);
        }
        self.notifications
            .extend(handled.notifications.iter().cloned());
        match (handled.action, self.stack.category(&class)) {
            (SessionAction::SetPose { .. }, ErrorCategory::Localization) => {
                self.clear_localization(LocalizationFix::Supervisor)
            }
            (SessionAction::Teleop { .. }, ErrorCategory::Navigation) => {
                self.clear_navigation(NavigationFix::Supervisor)
            }
            _ => {}
        }
        if let Some(class) = &handled.resolved_class {
            self.stack.arbiter.supervisor_resolved(class);
            self.emit(EventKind::ActionResult {
                class: class.clone(),
                action: RecoveryKind::RequestSupervisor,
                outcome: ActionOutcome::Completed,
                detail: format!("session {session} resolved"),
            });
        }
        Ok(handled)
    }

    /// Inject a fault now. Targets must exist in some configuration.
    pub fn inject(&mut self, kind: FaultKind, duration_s: Option<f64>) -> Result<(), SimError> {
        let fault = super::fault::Fault {
            at_s: to_secs(self.t),
            duration_s,
            kind,
        };
        self.scenario
            .validate_fault(&fault)
            .map_err(SimError::Fault)?;
        self.arm(fault.kind, fault.duration_s);
        Ok(())
    }

    /// Advance one step. Returns the events it produced.
    pub fn step(&mut self) -> Result<&[Event], SimError> {
        self.step_start = self.log.len();
        let now = self.t;
        self.activate_faults(now);
        self.run_chores(now);
        self.deadlock_crashes(now);
        self.orchestrate(now)?;
        self.progress_exec(now);
        self.expire_faults(now);
        if self.task != Task::Off {
            self.supervise(now);
        }
        self.behave(now);
        self.t += self.dt;
        Ok(&self.log.events()[self.step_start..])
    }

    pub fn run_until(&mut self, t: Nanos) -> Result<(), SimError> {
        while self.t < t.min(self.horizon) {
            self.step()?;
        }
        Ok(())
    }

    /// Write out motion accumulated so far. Later motion starts a new record.
    pub fn flush(&mut self) {
        let t = self.t;
        self.flush_motion(t);
    }

    /// Close open motion records and hand over the log.
    pub fn finish(mut self) -> EventLog {
        self.flush();
        self.log
    }

    fn emit(&mut self, kind: EventKind) {
        self.log.push(Event::new(self.t, kind));
    }

    // ---- faults -------------------------------------------------------------

    fn arm(&mut self, kind: FaultKind, duration_s: Option<f64>) {
        if let FaultKind::ClockDrift { offset_ms } = kind {
            self.clock_offset_ms = offset_ms;
            self.force_sample = true;
        }
        self.faults.push(ActiveFault {
            kind,
            duration: duration_s.map(secs),
            until: None,
            live: false,
        });
    }

    fn activate_faults(&mut self, now: Nanos) {
        while let Some(f) = self.scenario.faults.get(self.next_fault) {
            if secs(f.at_s) > now {
                break;
            }
            let (kind, duration) = (f.kind.clone(), f.duration_s);
            self.next_fault += 1;
            self.arm(kind, duration);
        }
        let patrolling = matches!(&self.task, Task::Leg(l) if l.purpose == Purpose::Patrol)
            && self.stack.orchestrator.active().name == NORMAL;
        let mut crashes = Vec::new();
        for f in self.faults.iter_mut().filter(|f| !f.live) {
            let ready = match &f.kind {
                FaultKind::ProcessCrash { target }
                | FaultKind::DeadlockRestartLoop { target, .. } => {
                    let up = self.stack.orchestrator.state(target) == Some(ProcessState::Running)
                        && self.stack.orchestrator.active().entity(target).is_some()
                        && self.stack.orchestrator.runner().is_alive(target);
                    if up {
                        crashes.push(target.clone());
                    }
                    up
                }
                FaultKind::LocalizationLoss { .. } | FaultKind::NavigationBlock { .. } => {
                    patrolling
                }
                FaultKind::DockingSlip { .. } => false,
                FaultKind::RateDegrade { .. }
                | FaultKind::ClockDrift { .. }
                | FaultKind::DockSignalLoss => true,
            };
            if ready {
                f.live = true;
                f.until = f.duration.map(|d| now + d);
            }
        }
        for target in crashes {
            self.stack.orchestrator.runner_mut().crash(&target);
        }
        self.faults
            .retain(|f| !(f.live && matches!(f.kind, FaultKind::ProcessCrash { .. })));
    }

    fn expire_faults(&mut self, now: Nanos) {
        let before = self.faults.len();
        let mut clock_restored = false;
        self.faults.retain(|f| {
            let keep = f.until.is_none_or(|u| now < u);
            if !keep && matches!(f.kind, FaultKind::ClockDrift { .. }) {
                clock_restored = true;
            }
            keep
        });
        if clock_restored {
            self.clock_offset_ms = 0.0;
        }
        if self.faults.len() != before {
            self.force_sample = true;
        }
    }

    fn deadlock_crashes(&mut self, now: Nanos) {
        let mut crash = Vec::new();
        for f in self.faults.iter().filter(|f| f.live) {
            if let FaultKind::DeadlockRestartLoop {
                target,
                crash_after_s,
            } = &f.kind
            {
                let alive = self.stack.orchestrator.runner().is_alive(target);
                let since = self.up_since.get(target).copied();
                if alive && since.is_some_and(|s| now.saturating_sub(s) >= secs(*crash_after_s)) {
                    crash.push(target.clone());
                }
            }
        }
        for target in crash {
            self.stack.orchestrator.runner_mut().crash(&target);
        }
    }

    fn has_fault(&self, pred: impl Fn(&FaultKind) -> bool) -> bool {
        self.faults.iter().any(|f| f.live && pred(&f.kind))
    }

    fn localization_lost(&self) -> bool {
        self.has_fault(|k| matches!(k, FaultKind::LocalizationLoss { .. }))
    }

    fn navigation_blocked(&self) -> bool {
        self.has_fault(|k| matches!(k, FaultKind::NavigationBlock { .. }))
    }

    fn dock_signal_lost(&self) -> bool {
        self.faults
            .iter()
            .any(|f| matches!(f.kind, FaultKind::DockSignalLoss))
    }

    fn clear_localization(&mut self, fix: LocalizationFix) {
        let before = self.faults.len();
        self.faults.retain(|f| {
            !(f.live
                && matches!(f.kind, FaultKind::LocalizationLoss { fixed_by } if fixed_by <= fix))
        });
        self.force_sample |= before != self.faults.len();
    }

    fn clear_navigation(&mut self, fix: NavigationFix) {
        let before = self.faults.len();
        self.faults.retain(|f| {
            !(f.live
                && matches!(f.kind, FaultKind::NavigationBlock { fixed_by } if fixed_by <= fix))
        });
        self.force_sample |= before != self.faults.len();
    }

    fn rate_factor(&self, channel: &str) -> f64 {
        self.faults
            .iter()
            .filter(|f| f.live)
            .filter_map(|f| match &f.kind {
                FaultKind::RateDegrade { target, factor } if target == channel => Some(*factor),
                _ => None,
            })
            .fold(1.0, f64::min)
    }

    // ---- people -------------------------------------------------------------

    fn schedule(&mut self, at: Nanos, chore: Chore) {
        self.chores.push((at, chore));
    }

    fn pick_supervisor(&mut self) -> String {
        let roster = self.stack.sessions.roster();
        if roster.is_empty() {
            return "onsite".to_string();
        }
        let i = self.supervisor_rng.random_range(0..roster.len());
        roster[i].id.clone()
    }

    fn run_chores(&mut self, now: Nanos) {
        if self.chores.is_empty() {
            return;
        }
        let mut due = Vec::new();
        self.chores.retain(|(at, c)| {
            if *at <= now {
                due.push((*at, c.clone()));
                false
            } else {
                true
            }
        });
        due.sort_by_key(|(at, _)| *at);
        for (_, chore) in due {
            self.run_chore(chore, now);
        }
    }

    fn session_action(&mut self, session: u64, supervisor: &str, action: SessionAction) {
        if let Err(e) = self.supervisor_action(session, supervisor, action) {
            tracing::warn!(session, error = %e, "session action rejected");
        }
    }

    fn run_chore(&mut self, chore: Chore, now: Nanos) {
        match chore {
            Chore::Attend { session, category } => {
                let supervisor = self.pick_supervisor();
                match category {
                    ErrorCategory::Localization => {
                        let pose = round_pose(self.robot.pose);
                        self.session_action(session, &supervisor, SessionAction::SetPose { pose });
                    }
                    ErrorCategory::Navigation => {
                        let teleop = SessionAction::Teleop {
                            v: 0.3,
                            omega: 0.0,
                            duration_s: 5.0,
                        };
                        self.session_action(session, &supervisor, teleop);
                    }
                    ErrorCategory::Clock => {
                        self.clock_offset_ms = 0.0;
                        self.faults
                            .retain(|f| !matches!(f.kind, FaultKind::ClockDrift { .. }));
                        self.force_sample = true;
                    }
                    _ => {
                        let stuck: Vec<String> = self
                            .faults
                            .iter()
                            .filter_map(|f| match &f.kind {
                                FaultKind::DeadlockRestartLoop { target, .. } if f.live => {
                                    Some(target.clone())
                                }
                                _ => None,
                            })
                            .collect();
                        for target in stuck {
                            // Beyond the remote interface: someone logs in and fixes it by hand.
                            self.emit(EventKind::ManualIntervention {
                                requested: false,
                                session: Some(session),
                                supervisor: Some(supervisor.clone()),
                                action: "ssh_fix".into(),
                                note: format!("cleared restart loop of {target}"),
                            });
                            self.faults.retain(
                                |f| !matches!(&f.kind, FaultKind::DeadlockRestartLoop { target: t, .. } if *t == target),
                            );
                            if self.stack.orchestrator.active().entity(&target).is_some() {
                                let _ = self.stack.orchestrator.restart_entity(&target);
                            }
                        }
                    }
                }
                let at = now + secs(self.scenario.supervisors.handling_s).max(NANOS_PER_SEC);
                self.schedule(
                    at,
                    Chore::Confirm {
                        session,
                        supervisor,
                    },
                );
            }
            Chore::Confirm {
                session,
                supervisor,
            } => {
                self.session_action(session, &supervisor, SessionAction::ConfirmFix);
            }
            Chore::ResetDock => {
                self.reset_requested = false;
                self.emit(EventKind::ManualIntervention {
                    requested: false,
                    session: None,
                    supervisor: None,
                    action: "reset_dock_station".into(),
                    note: "charging contact restored".into(),
                });
                self.faults
                    .retain(|f| !matches!(f.kind, FaultKind::DockSignalLoss));
            }
            Chore::SwitchOn => {
                self.emit(EventKind::ManualIntervention {
                    requested: false,
                    session: None,
                    supervisor: None,
                    action: "switch_on_and_dock".into(),
                    note: "robot switched on and placed on the dock".into(),
                });
                self.robot.pose = self.map.node(self.map.dock()).pose();
                self.robot.docked = true;
                self.task = Task::Docked;
                self.contact_check_at = None;
                self.stack.orchestrator.boot();
                self.force_sample = true;
            }
        }
    }

    // ---- supervision --------------------------------------------------------

    fn orchestrate(&mut self, now: Nanos) -> Result<(), SimError> {
        let events = self.stack.step_orchestrator(now)?;
        for e in events {
            self.force_sample = true;
            match e {
                OrchestratorEvent::StateChanged(change) => {
                    if change.to == ProcessState::Running {
                        self.up_since.insert(change.entity, now);
                    }
                }
                OrchestratorEvent::Activated { .. } => {}
                OrchestratorEvent::SwitchCompleted(report) => {
                    if report.from != report.to {
                        self.emit(EventKind::ConfigSwitch {
                            from: report.from.clone(),
                            to: report.to.clone(),
                        });
                    }
                    if let Some(exec) = &self.exec {
                        if exec.running.action == RecoveryKind::SwitchConfiguration {
                            self.complete_exec(
                                ActionOutcome::Completed,
                                format!("now in {}", report.to),
                            );
                        }
                    }
                }
                OrchestratorEvent::RestartCompleted(report) => {
                    let ok = report.outcome == ProcessState::Running;
                    if ok {
                        let channels: Vec<String> = self
                            .stack
                            .orchestrator
                            .active()
                            .entity(&report.entity)
                            .map(|e| e.outputs.iter().map(|o| o.name.clone()).collect())
                            .unwrap_or_default();
                        self.faults.retain(|f| {
                            !matches!(&f.kind, FaultKind::RateDegrade { target, .. } if f.live && channels.contains(target))
                        });
                        if report.entity == "localization" {
                            self.clear_localization(LocalizationFix::Restart);
                        }
                    }
                    let matches = self.exec.as_ref().is_some_and(|x| {
                        matches!(
                            x.running.action,
                            RecoveryKind::RestartNode | RecoveryKind::RestartLocalization
                        ) && x.running.target.as_deref() == Some(report.entity.as_str())
                    });
                    if matches {
                        let (outcome, detail) = if ok {
                            (
                                ActionOutcome::Completed,
                                format!("{} running", report.entity),
                            )
                        } else {
                            (
                                ActionOutcome::Failed,
                                format!("{} is {}", report.entity, report.outcome.as_str()),
                            )
                        };
                        self.complete_exec(outcome, detail);
                    }
                }
            }
        }
        Ok(())
    }

    fn complete_exec(&mut self, outcome: ActionOutcome, detail: String) {
        if let Some(x) = self.exec.take() {
            self.emit(EventKind::ActionResult {
                class: x.running.class.to_string(),
                action: x.running.action,
                outcome,
                detail,
            });
        }
    }

    fn progress_exec(&mut self, now: Nanos) {
        let Some(x) = &self.exec else { return };
        let action = x.running.action;
        if x.until.is_some_and(|u| now >= u) {
            match action {
                RecoveryKind::Wait => self.clear_navigation(NavigationFix::Wait),
                RecoveryKind::MoveBack => self.clear_navigation(NavigationFix::MoveBack),
                RecoveryKind::RotateSlow => self.clear_localization(LocalizationFix::Rotate),
                _ => {}
            }
            self.complete_exec(ActionOutcome::Completed, String::new());
        } else if now >= x.deadline {
            self.complete_exec(ActionOutcome::Failed, "deadline exceeded".into());
        }
    }

    fn entity_alive(&self, id: &str) -> bool {
        self.stack.orchestrator.state(id) == Some(ProcessState::Running)
            && self.stack.orchestrator.runner().is_alive(id)
    }

    fn sample(&mut self, now: Nanos) {
        let liveness = self
            .stack
            .orchestrator
            .liveness_reports(now, secs(LIVENESS_TIMEOUT_S));
        for r in liveness {
            self.stack.ingest(r);
        }
        let rate_due = self.force_sample || now >= self.next_rate;
        let clock_due = self.force_sample || now >= self.next_clock;
        if rate_due {
            self.next_rate = now + secs(RATE_PERIOD_S);
        }
        if clock_due {
            self.next_clock = now + secs(CLOCK_PERIOD_S);
        }
        self.force_sample = false;
        let lost = self.localization_lost();
        let blocked = self.navigation_blocked();
        let mut reports = Vec::new();
        for spec in self.stack.monitors() {
            let report = match &spec.kind {
                MonitorKind::Localization { band } => {
                    let v = if lost { LOST } else { LOCALIZED };
                    MonitorReport::classified(
                        spec.id.as_str(),
                        spec.entity.as_str(),
                        v,
                        Unit::Ratio,
                        band,
                        now,
                    )
                }
                MonitorKind::Navigation { band } => {
                    let v = if blocked { 1.0 } else { 0.0 };
                    MonitorReport::classified(
                        spec.id.as_str(),
                        spec.entity.as_str(),
                        v,
                        Unit::Ratio,
                        band,
                        now,
                    )
                }
                MonitorKind::ClockSkew { band, .. } if clock_due => MonitorReport::classified(
                    spec.id.as_str(),
                    spec.entity.as_str(),
                    self.clock_offset_ms.abs(),
                    Unit::Millis,
                    band,
                    now,
                ),
                MonitorKind::Rate {
                    channel,
                    nominal_hz,
                    band,
                    ..
                } if rate_due => self.rate_report(spec, channel, *nominal_hz, band, now),
                _ => continue,
            };
            reports.push(report);
        }
        for r in reports {
            self.stack.ingest(r);
        }
    }

    fn rate_report(
        &self,
        spec: &MonitorSpec,
        channel: &str,
        nominal_hz: f64,
        band: &crate::monitor::Band<f64>,
        now: Nanos,
    ) -> MonitorReport {
        let (id, entity) = (spec.id.as_str(), spec.entity.as_str());
        let ok = |value: f64, msg: String| {
            MonitorReport::with_level(id, entity, value, Unit::Hertz, MonitorLevel::Ok, now, msg)
        };
        match self.stack.orchestrator.state(entity) {
            Some(ProcessState::Running) if self.stack.orchestrator.runner().is_alive(entity) => {
                let hz = nominal_hz * self.rate_factor(channel);
                MonitorReport::classified(id, entity, hz, Unit::Hertz, band, now)
            }
            // A silent producer is the liveness monitor's business.
            Some(ProcessState::Running) => ok(0.0, "producer down".into()),
            Some(ProcessState::Failed) => {
                MonitorReport::classified(id, entity, 0.0, Unit::Hertz, band, now)
            }
            Some(s) => ok(0.0, format!("excluded while {}", s.as_str())),
            None => ok(0.0, "excluded while STOPPED".into()),
        }
    }

    fn supervise(&mut self, now: Nanos) {
        self.sample(now);
        let running = self.exec.as_ref().map(|x| x.running.clone());
        let mut sink = RecordingSink::default();
        let (status, outcome) = self.stack.tick(now, running.as_ref(), &mut sink);
        self.log_levels(&status);
        if self.remote {
            self.last_status = Some(status.clone());
        }
        if outcome.cancelled.is_some() && self.exec.is_some() {
            self.complete_exec(ActionOutcome::Cancelled, "superseded".into());
        }
        if let Some(d) = outcome.dispatched {
            self.dispatch(d, &status, now);
        }
        for e in self.stack.sessions.expire_sessions(now) {
            self.notifications.extend(e.notifications);
            self.emit(EventKind::SupervisorResolution {
                session: e.session,
                supervisor: String::new(),
                state: "EXPIRED".into(),
            });
            // Stop waiting on a session nobody can act on; the chain may ask again.
            self.stack.arbiter.supervisor_resolved(&e.class);
            self.emit(EventKind::ActionResult {
                class: e.class,
                action: RecoveryKind::RequestSupervisor,
                outcome: ActionOutcome::Failed,
                detail: format!("session {} expired", e.session),
            });
        }
    }

    fn log_levels(&mut self, status: &crate::monitor::AggregatedStatus) {
        let mut changed = Vec::new();
        for (id, r) in &status.entries {
            if self.logged_levels.get(id) != Some(&r.level) {
                self.logged_levels.insert(id.clone(), r.level);
                changed.push(r.clone());
            }
        }
        self.logged_levels
            .retain(|id, _| status.entries.contains_key(id));
        for r in changed {
            self.emit(EventKind::MonitorReport {
                monitor_id: r.monitor_id.to_string(),
                entity_id: r.entity_id.to_string(),
                value: if r.value.is_finite() {
                    round6(r.value)
                } else {
                    0.0
                },
                unit: r.unit,
                level: r.level,
                message: r.message.clone(),
            });
        }
    }

    fn dispatch(&mut self, d: Dispatch, status: &crate::monitor::AggregatedStatus, now: Nanos) {
        let category = self.stack.category(&d.class);
        let kind = d.action.action;
        let class = d.class.to_string();
        self.emit(EventKind::ActionDispatch {
            class: class.clone(),
            category,
            action: kind,
            episode: d.episode,
            target: d.target.clone(),
            pose: Some(round_pose(self.robot.pose)),
        });
        let deadline = now + secs(ACTION_DEADLINE_S);
        let start = |sim: &mut Self, target: Option<String>, until: Option<Nanos>| {
            sim.exec = Some(Exec {
                running: RunningAction {
                    class: d.class.clone(),
                    action: kind,
                    since: now,
                    target,
                },
                until,
                deadline,
            });
        };
        let fail = |sim: &mut Self, detail: String| {
            sim.emit(EventKind::ActionResult {
                class: class.clone(),
                action: kind,
                outcome: ActionOutcome::Failed,
                detail,
            });
        };
        match kind {
            RecoveryKind::RestartNode | RecoveryKind::RestartLocalization => {
                let target = if kind == RecoveryKind::RestartLocalization {
                    Some("localization".to_string())
                } else {
                    d.target.clone()
                };
                match target {
                    Some(t) if self.stack.orchestrator.restart_entity(&t).is_ok() => {
                        start(self, Some(t), None)
                    }
                    Some(t) => fail(self, format!("`{t}` is not in the active configuration")),
                    None => fail(self, "no target entity".into()),
                }
            }
            RecoveryKind::Wait => {
                let dur = d.action.duration_s.unwrap_or(10.0);
                start(self, None, Some(now + secs(dur)));
            }
            RecoveryKind::RotateSlow => {
                let dur = d.action.duration_s.unwrap_or(20.0);
                start(self, None, Some(now + secs(dur)));
            }
            RecoveryKind::MoveBack => {
                let dist = d.action.distance_m.unwrap_or(0.5);
                start(self, None, Some(now + secs(dist / MOVE_BACK_SPEED)));
            }
            RecoveryKind::ResyncClock => {
                self.clock_offset_ms = 0.0;
                self.faults
                    .retain(|f| !matches!(f.kind, FaultKind::ClockDrift { .. }));
                self.force_sample = true;
                self.next_clock = now;
                self.emit(EventKind::ActionResult {
                    class: class.clone(),
                    action: kind,
                    outcome: ActionOutcome::Completed,
                    detail: "offset 0 ms".into(),
                });
            }
            RecoveryKind::SwitchConfiguration => match d.action.target_config.as_deref() {
                Some(to) if self.stack.orchestrator.switch_configuration(to).is_ok() => {
                    start(self, None, None);
                }
                other => fail(self, format!("cannot switch to {other:?}")),
            },
            RecoveryKind::RequestSupervisor => {
                let opened = self.stack.sessions.open_session(
                    &class,
                    Some(status.clone()),
                    Some(self.robot.pose),
                    now,
                );
                for e in opened.events {
                    self.emit(e);
                }
                self.notifications.extend(opened.notifications);
                if self.remote {
                    return;
                }
                let s = &self.scenario.supervisors;
                let jitter = self.supervisor_rng.random::<f64>() * s.response_jitter_s;
                let at = now + secs(s.response_s + jitter).max(NANOS_PER_SEC);
                self.schedule(
                    at,
                    Chore::Attend {
                        session: opened.session,
                        category,
                    },
                );
            }
        }
    }

    // ---- robot --------------------------------------------------------------

    fn supervisor_pending(&self) -> bool {
        self.stack.sessions.sessions().any(|s| s.state.is_open())
    }

    fn critical_down(&self) -> bool {
        let active = self.stack.orchestrator.active();
        self.scenario
            .robot
            .critical
            .iter()
            .filter(|id| active.entity(id).is_some())
            .any(|id| !self.entity_alive(id))
    }

    fn halted(&self) -> bool {
        self.navigation_blocked()
            || self.localization_lost()
            || self.exec.is_some()
            || self.supervisor_pending()
            || !self.stack.orchestrator.is_idle()
            || self.critical_down()
    }

    fn base_mode(&self) -> RobotMode {
        match &self.task {
            Task::Docked => RobotMode::Charging,
            Task::Switching {
                then: AfterSwitch::Undock,
                ..
            } => RobotMode::Charging,
            Task::Switching {
                then: AfterSwitch::Dock,
                ..
            } => RobotMode::Docking,
            Task::Leg(l) if l.purpose == Purpose::ToDock => RobotMode::Docking,
            Task::Leg(_) | Task::Dwell { .. } => RobotMode::Patrol,
            Task::Docking { .. } | Task::BackingOut { .. } => RobotMode::Docking,
            Task::Off => RobotMode::Off,
        }
    }

    fn displayed_mode(&self) -> RobotMode {
        let base = self.base_mode();
        if base == RobotMode::Off {
            return base;
        }
        if base != RobotMode::Charging && self.supervisor_pending() {
            return RobotMode::Error;
        }
        let motion_recovery = self.exec.as_ref().is_some_and(|x| {
            matches!(
                x.running.action,
                RecoveryKind::Wait | RecoveryKind::MoveBack | RecoveryKind::RotateSlow
            )
        });
        if motion_recovery && base != RobotMode::Charging {
            return RobotMode::Recovering;
        }
        base
    }

    fn on_duty(&self, now: Nanos) -> bool {
        self.scenario.schedule.is_on_duty(now)
    }

    fn needs_dock(&self, now: Nanos) -> bool {
        !self.on_duty(now) || self.robot.battery < self.scenario.battery.dock_threshold
    }

    fn leg(&self, from: NodeIndex, to: NodeIndex, purpose: Purpose, route: Vec<NodeIndex>) -> Leg {
        let edge = self.map.edge(from, to).expect("route follows map edges");
        let speed = match purpose {
            Purpose::Undock => self.scenario.robot.backup_speed,
            _ => edge.speed.unwrap_or(self.scenario.robot.patrol_speed),
        };
        Leg {
            from,
            to,
            length: edge.length,
            speed,
            travelled: 0.0,
            purpose,
            route,
        }
    }

    fn head_to_dock(&mut self, at: NodeIndex) {
        let approach = self.map.dock_approach();
        if at == approach {
            self.begin_switch(CHARGING, AfterSwitch::Dock);
            return;
        }
        let mut route = self.map.route(at, approach).expect("map is connected");
        route.remove(0);
        let next = route.remove(0);
        self.task = Task::Leg(self.leg(at, next, Purpose::ToDock, route));
    }

    fn begin_switch(&mut self, to: &'static str, then: AfterSwitch) {
        if self.stack.orchestrator.active().name != to {
            let _ = self.stack.orchestrator.switch_configuration(to);
        }
        self.task = Task::Switching { to, then };
    }

    fn patrol_from(&mut self, at: NodeIndex) {
        let next = next_waypoint(&self.map, at, self.previous_node, &mut self.route_rng);
        self.previous_node = Some(at);
        self.task = Task::Leg(self.leg(at, next, Purpose::Patrol, Vec::new()));
    }

    fn start_docking(&mut self, now: Nanos) {
        let r = &self.scenario.robot;
        let range = self
            .dock_rng
            .random_range(r.docking_range[0]..=r.docking_range[1]);
        let bearing = self.dock_rng.random_range(-10f64..=10.0).to_radians();
        let yaw = self.dock_rng.random_range(-5f64..=5.0).to_radians();
        let station = Pose::origin();
        let initial = frontal_pose(&self.scenario.landmark, station, range, bearing, yaw);
        let slip = self
            .faults
            .iter()
            .position(|f| matches!(f.kind, FaultKind::DockingSlip { .. }));
        let fault = slip.map(|i| match self.faults.remove(i).kind {
            FaultKind::DockingSlip {
                angular_bias,
                linear_scale,
            } => DockingFault::WheelSlip {
                angular_bias,
                linear_scale,
            },
            _ => unreachable!(),
        });
        let mut params = self.scenario.docking;
        params.scan = params.scan.with_sigma(self.scenario.robot.docking_sigma);
        let outcome = simulate_docking(
            initial,
            station,
            &self.scenario.landmark,
            &params,
            fault.as_ref(),
            &mut self.dock_rng,
        );
        let secs_needed = outcome.time_s().ceil().max(1.0);
        self.robot.docked = false;
        self.task = Task::Docking {
            until: now + secs(secs_needed),
            outcome,
        };
    }

    fn finish_docking(&mut self, outcome: DockingOutcome<f64>, now: Nanos) {
        match outcome {
            DockingOutcome::Docked {
                position_error,
                heading_error,
                ..
            } => {
                self.emit(EventKind::DockingAttempt {
                    success: true,
                    reason: None,
                    position_error_m: Some(round6(position_error)),
                    heading_error_rad: Some(round6(heading_error)),
                });
                self.robot.pose = self.map.node(self.map.dock()).pose();
                self.robot.docked = true;
                self.task = Task::Docked;
                self.contact_check_at = Some(now + secs(self.scenario.robot.contact_check_s));
            }
            DockingOutcome::Failed { reason, .. } => {
                let (pe, he) = match reason {
                    crate::docking::DockingFailure::Misaligned {
                        position_error,
                        heading_error,
                    } => (Some(round6(position_error)), Some(round6(heading_error))),
                    _ => (None, None),
                };
                self.emit(EventKind::DockingAttempt {
                    success: false,
                    reason: Some(reason.to_string()),
                    position_error_m: pe,
                    heading_error_rad: he,
                });
                // The base is wedged against the station: emergency stop, power off.
                self.task = Task::Off;
                self.robot.docked = false;
                if self.exec.is_some() {
                    self.complete_exec(ActionOutcome::Cancelled, "robot switched off".into());
                }
                self.stack.orchestrator.shutdown();
                let at = now + secs(self.scenario.supervisors.onsite_response_s).max(NANOS_PER_SEC);
                self.schedule(at, Chore::SwitchOn);
            }
        }
    }

    fn update_task(&mut self, now: Nanos) {
        match self.task.clone() {
            Task::Docked => {
                if let Some(at) = self.contact_check_at {
                    if now >= at {
                        self.contact_check_at = None;
                        if self.dock_signal_lost() {
                            if self.dock_retries_left > 0 {
                                self.dock_retries_left -= 1;
                                self.robot.docked = false;
                                let back = self.scenario.robot.undock_distance
                                    / self.scenario.robot.backup_speed;
                                self.task = Task::BackingOut {
                                    until: now + secs(back),
                                };
                                return;
                            }
                            if !self.reset_requested {
                                self.reset_requested = true;
                                let at = now
                                    + secs(self.scenario.supervisors.onsite_response_s)
                                        .max(NANOS_PER_SEC);
                                self.schedule(at, Chore::ResetDock);
                            }
                        }
                    }
                    return;
                }
                let b = &self.scenario.battery;
                let charged = self.robot.battery >= b.resume_level - 1e-9;
                if self.on_duty(now)
                    && charged
                    && !self.dock_signal_lost()
                    && !self.supervisor_pending()
                    && self.stack.orchestrator.is_idle()
                {
                    self.begin_switch(NORMAL, AfterSwitch::Undock);
                }
            }
            Task::Switching { to, then } => {
                let o = &self.stack.orchestrator;
                if o.is_idle() && o.active().name == to && !self.critical_down() {
                    match then {
                        AfterSwitch::Undock => {
                            let (dock, approach) = (self.map.dock(), self.map.dock_approach());
                            self.robot.docked = false;
                            self.dock_retries_left = self.scenario.robot.dock_retries;
                            self.previous_node = None;
                            self.task =
                                Task::Leg(self.leg(dock, approach, Purpose::Undock, Vec::new()));
                        }
                        AfterSwitch::Dock => {
                            self.dock_retries_left = self.scenario.robot.dock_retries;
                            self.start_docking(now);
                        }
                    }
                }
            }
            Task::Leg(leg) if leg.travelled >= leg.length - 1e-9 => self.arrive(leg, now),
            Task::Leg(_) => {}
            Task::Dwell { at, until } => {
                if now >= until {
                    if self.needs_dock(now) {
                        self.head_to_dock(at);
                    } else {
                        self.patrol_from(at);
                    }
                }
            }
            Task::Docking { until, outcome } => {
                if now >= until {
                    self.finish_docking(outcome, now);
                }
            }
            Task::BackingOut { until } => {
                if now >= until {
                    self.start_docking(now);
                }
            }
            Task::Off => {}
        }
    }

    fn arrive(&mut self, leg: Leg, now: Nanos) {
        self.robot.pose = self.map.node(leg.to).pose();
        match leg.purpose {
            Purpose::Undock => self.patrol_from(leg.to),
            Purpose::Patrol => {
                self.report_detections();
                if self.needs_dock(now) {
                    self.previous_node = Some(leg.from);
                    self.head_to_dock(leg.to);
                } else {
                    self.previous_node = Some(leg.from);
                    let dwell = secs(self.scenario.robot.dwell_s);
                    self.task = Task::Dwell {
                        at: leg.to,
                        until: now + dwell,
                    };
                    if dwell == 0 {
                        self.patrol_from(leg.to);
                    }
                }
            }
            Purpose::ToDock => {
                let mut route = leg.route;
                if route.is_empty() {
                    self.head_to_dock(leg.to);
                } else {
                    let next = route.remove(0);
                    self.task = Task::Leg(self.leg(leg.to, next, Purpose::ToDock, route));
                }
            }
        }
    }

    fn report_detections(&mut self) {
        let lambda = self.scenario.robot.people_per_hour * self.exposure_s / 3600.0;
        self.exposure_s = 0.0;
        if lambda <= 0.0 {
            return;
        }
        let count = Poisson::new(lambda).map_or(0.0, |p| p.sample(&mut self.people_rng)) as u64;
        if count > 0 {
            self.emit(EventKind::DetectionCount {
                count,
                label: Some("person".into()),
            });
        }
    }

    fn flush_motion(&mut self, now: Nanos) {
        debug_assert_eq!(now, self.t);
        if self.motion.moving_s > 0.0 {
            let m = std::mem::take(&mut self.motion);
            self.emit(EventKind::OdometryDelta {
                distance_m: round6(m.distance_m),
                moving_s: round6(m.moving_s),
            });
        }
    }

    /// Distance the robot will cover during this step, and whether it is moving.
    fn planned_motion(&self, dt_s: f64) -> Option<f64> {
        if let Some(x) = &self.exec {
            if x.running.action == RecoveryKind::MoveBack
                && matches!(self.task, Task::Leg(_) | Task::Dwell { .. })
            {
                return Some(MOVE_BACK_SPEED * dt_s);
            }
        }
        match &self.task {
            Task::Leg(l) if !self.halted() => {
                Some((l.length - l.travelled).min(l.speed * dt_s)).filter(|d| *d > 0.0)
            }
            Task::Docking { outcome, .. } => {
                let t = outcome.time_s().ceil().max(1.0);
                Some(outcome.distance_m() / t * dt_s)
            }
            Task::BackingOut { .. } => Some(self.scenario.robot.backup_speed * dt_s),
            _ => None,
        }
    }

    fn behave(&mut self, now: Nanos) {
        let dt_s = to_secs(self.dt);
        self.update_task(now);
        let mode = self.displayed_mode();
        let step = self.planned_motion(dt_s);
        if self.motion.moving_s > 0.0 && (step.is_none() || self.motion.mode != Some(mode)) {
            self.flush_motion(now);
        }
        if mode != self.robot.mode {
            self.emit(EventKind::ModeChange {
                from: self.robot.mode,
                to: mode,
                pose: Some(round_pose(self.robot.pose)),
            });
            self.robot.mode = mode;
        }
        let mut activity = match mode {
            RobotMode::Off => Activity::Off,
            RobotMode::Charging if self.robot.docked && !self.dock_signal_lost() => {
                Activity::Charging
            }
            _ => Activity::Idle,
        };
        if let Some(d) = step {
            activity = Activity::Moving;
            let backwards = self
                .exec
                .as_ref()
                .is_some_and(|x| x.running.action == RecoveryKind::MoveBack);
            let speed = d / dt_s;
            self.motion.distance_m += d;
            self.motion.moving_s += dt_s;
            self.motion.mode = Some(mode);
            self.robot.odometer_m += d;
            match &mut self.task {
                Task::Leg(l) => {
                    if backwards {
                        l.travelled = (l.travelled - d).max(0.0);
                    } else {
                        l.travelled += d;
                        if mode == RobotMode::Patrol {
                            self.exposure_s += d / speed.max(1e-9);
                        }
                    }
                    let (a, b) = (self.map.node(l.from).pose(), self.map.node(l.to).pose());
                    let f = if l.length > 0.0 {
                        l.travelled / l.length
                    } else {
                        1.0
                    };
                    let heading = (b.y - a.y).atan2(b.x - a.x);
                    self.robot.pose =
                        Pose::new(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, heading);
                }
                _ if backwards => self.robot.pose = self.robot.pose.advanced(-d),
                _ => {}
            }
        }
        self.robot.battery = self
            .scenario
            .battery
            .step(self.robot.battery, activity, dt_s);
    }
}

/// Run a scenario to its horizon.
pub fn run(scenario: &Scenario) -> Result<EventLog, SimError> {
    let mut sim = Simulator::new(scenario.clone())?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::fault::Fault;

    fn one_day() -> Scenario {
        Scenario {
            name: "t".into(),
            seed: 3,
            days: 1,
            ..Scenario::default()
        }
    }

    fn kinds(log: &EventLog, name: &str) -> Vec<Event> {
        log.events()
            .iter()
            .filter(|e| e.kind.name() == name)
            .cloned()
            .collect()
    }

    fn run_from(scenario: Scenario, start_h: f64) -> Simulator {
        let mut sim = Simulator::new(scenario).unwrap();
        sim.run_until(secs(start_h * 3600.0)).unwrap();
        sim
    }

    #[test]
    fn fault_free_day_docks_twice_without_recoveries() {
        let log = run(&one_day()).unwrap();
        assert!(kinds(&log, "action_dispatch").is_empty());
        let docking = kinds(&log, "docking_attempt");
        assert_eq!(docking.len(), 2);
        assert!(docking
            .iter()
            .all(|e| matches!(e.kind, EventKind::DockingAttempt { success: true, .. })));
        let distance: f64 = kinds(&log, "odometry_delta")
            .iter()
            .map(|e| match e.kind {
                EventKind::OdometryDelta { distance_m, .. } => distance_m,
                _ => 0.0,
            })
            .sum();
        assert!(distance > 4000.0 && distance < 7000.0, "{distance}");
    }

    #[test]
    fn robot_waits_for_duty_hours() {
        let sim = run_from(one_day(), 8.9);
        assert_eq!(sim.robot().mode, RobotMode::Charging);
        let sim = run_from(one_day(), 9.5);
        assert_eq!(sim.robot().mode, RobotMode::Patrol);
    }

    #[test]
    fn unknown_fault_target_rejected() {
        let mut sim = Simulator::new(one_day()).unwrap();
        let err = sim.inject(
            FaultKind::ProcessCrash {
                target: "nope".into(),
            },
            None,
        );
        assert!(matches!(err, Err(SimError::Fault(_))));
    }

    #[test]
    fn crash_is_restarted_once() {
        let mut sim = run_from(one_day(), 10.0);
        sim.inject(
            FaultKind::ProcessCrash {
                target: "camera".into(),
            },
            None,
        )
        .unwrap();
        sim.run_until(secs(10.5 * 3600.0)).unwrap();
        let log = sim.finish();
        let d = kinds(&log, "action_dispatch");
        assert_eq!(d.len(), 1);
        assert!(matches!(
            &d[0].kind,
            EventKind::ActionDispatch { action: RecoveryKind::RestartNode, target: Some(t), .. } if t == "camera"
        ));
        assert_eq!(kinds(&log, "action_result").len(), 1);
    }

    #[test]
    fn localization_loss_escalates_to_supervisor() {
        let mut sc = one_day();
        sc.faults.push(Fault::new(
            10.0 * 3600.0,
            FaultKind::LocalizationLoss {
                fixed_by: LocalizationFix::Supervisor,
            },
        ));
        let mut sim = Simulator::new(sc).unwrap();
        sim.run_until(secs(11.0 * 3600.0)).unwrap();
        let log = sim.finish();
        let actions: Vec<RecoveryKind> = kinds(&log, "action_dispatch")
            .iter()
            .map(|e| match e.kind {
                EventKind::ActionDispatch { action, .. } => action,
                _ => unreachable!(),
            })
            .collect();
        use RecoveryKind::*;
        assert_eq!(
            actions,
            [
                RotateSlow,
                RotateSlow,
                RestartLocalization,
                RestartLocalization,
                RequestSupervisor
            ]
        );
        assert_eq!(kinds(&log, "supervisor_request").len(), 1);
        assert_eq!(kinds(&log, "supervisor_resolution").len(), 1);
        let modes: Vec<RobotMode> = kinds(&log, "mode_change")
            .iter()
            .map(|e| match e.kind {
                EventKind::ModeChange { to, .. } => to,
                _ => unreachable!(),
            })
            .collect();
        assert!(modes.contains(&RobotMode::Error) && modes.contains(&RobotMode::Recovering));
        assert_eq!(*modes.last().unwrap(), RobotMode::Patrol);
    }

    #[test]
    fn restart_loop_trips_storm_guard() {
        let mut sc = one_day();
        sc.faults.push(Fault::new(
            10.0 * 3600.0,
            FaultKind::DeadlockRestartLoop {
                target: "mask_detector".into(),
                crash_after_s: 2.0,
            },
        ));
        let log = {
            let mut sim = Simulator::new(sc).unwrap();
            sim.run_until(secs(11.0 * 3600.0)).unwrap();
            sim.finish()
        };
        let d = kinds(&log, "action_dispatch");
        let restarts: Vec<Nanos> = d
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    EventKind::ActionDispatch {
                        action: RecoveryKind::RestartNode,
                        ..
                    }
                )
            })
            .map(|e| e.t)
            .collect();
        assert_eq!(restarts.len(), 10);
        assert!(restarts[9] - restarts[0] < secs(180.0));
        assert!(matches!(
            d.last().unwrap().kind,
            EventKind::ActionDispatch {
                action: RecoveryKind::RequestSupervisor,
                ..
            }
        ));
        let unplanned = kinds(&log, "manual_intervention")
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    EventKind::ManualIntervention {
                        requested: false,
                        ..
                    }
                )
            })
            .count();
        assert_eq!(unplanned, 1);
    }

    #[test]
    fn docking_slip_switches_robot_off_until_someone_helps() {
        let mut sc = one_day();
        sc.faults.push(Fault::new(
            9.5 * 3600.0,
            FaultKind::DockingSlip {
                angular_bias: 0.15,
                linear_scale: 0.9,
            },
        ));
        let log = run(&sc).unwrap();
        let attempts = kinds(&log, "docking_attempt");
        assert!(matches!(
            attempts[0].kind,
            EventKind::DockingAttempt { success: false, .. }
        ));
        let off = kinds(&log, "mode_change").iter().any(|e| {
            matches!(
                e.kind,
                EventKind::ModeChange {
                    to: RobotMode::Off,
                    ..
                }
            )
        });
        assert!(off);
        assert_eq!(kinds(&log, "manual_intervention").len(), 1);
    }

    #[test]
    fn lost_charge_contact_retries_then_waits_for_reset() {
        let mut sc = one_day();
        sc.faults
            .push(Fault::new(12.0 * 3600.0, FaultKind::DockSignalLoss));
        let log = run(&sc).unwrap();
        // Midday docking plus two retries, then the evening docking.
        assert_eq!(kinds(&log, "docking_attempt").len(), 4);
        let reset = kinds(&log, "manual_intervention");
        assert_eq!(reset.len(), 1);
        assert!(
            matches!(&reset[0].kind, EventKind::ManualIntervention { action, requested: false, .. } if action == "reset_dock_station")
        );
    }

    #[test]
    fn same_seed_same_log() {
        let mut sc = one_day();
        sc.faults.push(Fault::new(
            10.0 * 3600.0,
            FaultKind::NavigationBlock {
                fixed_by: NavigationFix::MoveBack,
            },
        ));
        assert_eq!(run(&sc).unwrap().to_jsonl(), run(&sc).unwrap().to_jsonl());
    }
}
