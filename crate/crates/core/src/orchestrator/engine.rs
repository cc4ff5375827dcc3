use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ConfigError, Configuration, ConfigurationSet, EntitySpec};
use super::runner::{Probe, Runner};
use super::state::{ProcessState, StateChange};
use crate::monitor::MonitorLevel;
use crate::monitor::{check_liveness, MonitorReport, MonitorSpec, Unit};
use crate::time::{secs, Nanos};

pub const DEFAULT_STOP_TIMEOUT_S: f64 = 5.0;
pub const MAX_START_ATTEMPTS: u32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "configuration drift: `{entity}` is not declared in active configuration `{configuration}`"
    )]
    UndeclaredEntity {
        entity: String,
        configuration: String,
    },
    #[error("unknown configuration `{0}`")]
    UnknownConfiguration(String),
    #[error("failed to purge scratch state of `{entity}`: {source}")]
    Purge {
        entity: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub from: String,
    pub to: String,
    pub started_at: Nanos,
    pub finished_at: Nanos,
    pub changes: Vec<StateChange>,
    pub stopped: Vec<String>,
    pub started: Vec<String>,
    pub failed: Vec<String>,
    pub hooks: Vec<String>,
}

impl TransitionReport {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub entity: String,
    pub requested_at: Nanos,
    pub finished_at: Nanos,
    pub attempts: u32,
    pub outcome: ProcessState,
    pub changes: Vec<StateChange>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrchestratorEvent {
    StateChanged(StateChange),
    /// The active configuration changed; monitors and tree must follow.
    Activated {
        from: Option<String>,
        to: String,
    },
    SwitchCompleted(TransitionReport),
    RestartCompleted(RestartReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityStatus {
    pub id: String,
    pub state: ProcessState,
    pub since: Nanos,
    pub last_heartbeat: Option<Nanos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Heartbeat<'a> {
    pub entity: &'a str,
    pub t: Nanos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Command {
    Boot,
    Switch(String),
    Restart(String),
    Shutdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Idle,
    Run,
    Stop,
    Restart,
}

#[derive(Debug)]
struct Slot {
    spec: EntitySpec,
    state: ProcessState,
    since: Nanos,
    last_heartbeat: Option<Nanos>,
    goal: Goal,
    attempts: u32,
    forced_at: Option<Nanos>,
}

#[derive(Debug)]
enum InFlight {
    Switch {
        report: TransitionReport,
        touched: BTreeSet<String>,
        boot: bool,
    },
    Restart {
        report: RestartReport,
    },
    Shutdown,
}

/// Step-driven process orchestrator.
///
/// Commands are queued and executed one at a time; [`Orchestrator::step`] advances
/// the current one without blocking. Heartbeats are collected independently by
/// [`Orchestrator::supervise`], so a stuck or crash-looping entity never holds up
/// the others.
#[derive(Debug)]
pub struct Orchestrator<R> {
    configs: BTreeMap<String, Configuration>,
    active: String,
    runner: R,
    scratch_root: Option<PathBuf>,
    slots: BTreeMap<String, Slot>,
    queue: VecDeque<Command>,
    current: Option<InFlight>,
    events: Vec<OrchestratorEvent>,
    stop_timeout: Nanos,
}

impl<R: Runner> Orchestrator<R> {
    /// Create an orchestrator with `set.initial` active and its entities queued to start.
    pub fn new(set: ConfigurationSet, runner: R) -> Result<Self, OrchestratorError> {
        set.validate()?;
        let active = set.initial.clone();
        let configs = set
            .configurations
            .into_iter()
            .map(|c| (c.name.clone(), c))
            .collect();
        let mut queue = VecDeque::new();
        queue.push_back(Command::Boot);
        Ok(Self {
            configs,
            active,
            runner,
            scratch_root: None,
            slots: BTreeMap::new(),
            queue,
            current: None,
            events: Vec::new(),
            stop_timeout: secs(DEFAULT_STOP_TIMEOUT_S),
        })
    }

    /// Per-entity scratch directories live under `root`; they are wiped before each start.
    pub fn with_scratch_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.scratch_root = Some(root.into());
        self
    }

    pub fn with_stop_timeout(mut self, timeout: Nanos) -> Self {
        self.stop_timeout = timeout;
        self
    }

    pub fn runner(&self) -> &R {
        &self.runner
    }

    pub fn runner_mut(&mut self) -> &mut R {
        &mut self.runner
    }

    pub fn active(&self) -> &Configuration {
        &self.configs[&self.active]
    }

    pub fn configuration(&self, name: &str) -> Option<&Configuration> {
        self.configs.get(name)
    }

    pub fn configuration_names(&self) -> impl Iterator<Item = &str> {
        self.configs.keys().map(String::as_str)
    }

    pub fn declared_monitors(&self) -> Vec<MonitorSpec> {
        self.active().monitor_specs()
    }

    /// True when no command is queued or executing.
    pub fn is_idle(&self) -> bool {
        self.current.is_none() && self.queue.is_empty()
    }

    pub fn switch_configuration(&mut self, to: &str) -> Result<(), OrchestratorError> {
        if !self.configs.contains_key(to) {
            return Err(OrchestratorError::UnknownConfiguration(to.to_string()));
        }
        self.queue.push_back(Command::Switch(to.to_string()));
        Ok(())
    }

    /// Queue a clean-state restart. Only entities of the active configuration qualify.
    pub fn restart_entity(&mut self, id: &str) -> Result<(), OrchestratorError> {
        if self.active().entity(id).is_none() {
            return Err(OrchestratorError::UndeclaredEntity {
                entity: id.to_string(),
                configuration: self.active.clone(),
            });
        }
        self.queue.push_back(Command::Restart(id.to_string()));
        Ok(())
    }

    /// Queue a start of every entity of the active configuration, e.g. after [`Orchestrator::shutdown`].
    pub fn boot(&mut self) {
        self.queue.push_back(Command::Boot);
    }

    /// Queue a stop of every entity.
    pub fn shutdown(&mut self) {
        self.queue.push_back(Command::Shutdown);
    }

    pub fn drain_events(&mut self) -> Vec<OrchestratorEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn state(&self, id: &str) -> Option<ProcessState> {
        self.slots.get(id).map(|s| s.state)
    }

    pub fn running_set(&self) -> BTreeSet<&str> {
        self.slots
            .iter()
            .filter(|(_, s)| s.state == ProcessState::Running)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn status(&self) -> Vec<EntityStatus> {
        self.slots
            .iter()
            .map(|(id, s)| EntityStatus {
                id: id.clone(),
                state: s.state,
                since: s.since,
                last_heartbeat: s.last_heartbeat,
            })
            .collect()
    }

    /// Record heartbeats of every RUNNING entity of the active configuration that still answers.
    pub fn supervise(&mut self, now: Nanos) -> Vec<Heartbeat<'_>> {
        let runner = &mut self.runner;
        let active = &self.configs[&self.active];
        let mut out = Vec::new();
        for (id, slot) in self.slots.iter_mut() {
            if slot.state != ProcessState::Running || active.entity(id).is_none() {
                continue;
            }
            if runner.probe(id) != Probe::Exited {
                slot.last_heartbeat = Some(now);
                out.push(Heartbeat { entity: id, t: now });
            }
        }
        out
    }

    /// Liveness reports for the active configuration.
    pub fn liveness_reports(&self, now: Nanos, timeout: Nanos) -> Vec<MonitorReport> {
        self.active()
            .entities
            .iter()
            .map(|e| {
                let id = MonitorSpec::liveness_id(&e.id);
                match self.slots.get(&e.id) {
                    Some(s) if s.state == ProcessState::Failed => MonitorReport::with_level(
                        id.as_str(),
                        e.id.as_str(),
                        0.0,
                        Unit::Seconds,
                        MonitorLevel::Error,
                        now,
                        "entity failed",
                    ),
                    Some(s) if s.state.excluded_from_liveness() => MonitorReport::with_level(
                        id.as_str(),
                        e.id.as_str(),
                        0.0,
                        Unit::Seconds,
                        MonitorLevel::Ok,
                        now,
                        format!("excluded while {}", s.state.as_str()),
                    ),
                    Some(s) => check_liveness(&e.id, s.last_heartbeat, now, timeout),
                    None => check_liveness(&e.id, None, now, timeout),
                }
            })
            .collect()
    }

    /// Advance the current command. Returns true if anything changed.
    pub fn step(&mut self, now: Nanos) -> bool {
        let mut progressed = false;
        loop {
            if self.current.is_none() {
                match self.queue.pop_front() {
                    Some(cmd) => {
                        self.begin(cmd, now);
                        progressed = true;
                    }
                    None => return progressed,
                }
            }
            while self.drive_all(now) {
                progressed = true;
            }
            if !self.try_finish(now) {
                return progressed;
            }
            progressed = true;
        }
    }

    fn begin(&mut self, cmd: Command, now: Nanos) {
        match cmd {
            Command::Boot => {
                let ids: Vec<String> = self
                    .active()
                    .entities
                    .iter()
                    .map(|e| e.id.clone())
                    .collect();
                for id in &ids {
                    self.want(id, Goal::Run, now);
                }
                self.events.push(OrchestratorEvent::Activated {
                    from: None,
                    to: self.active.clone(),
                });
                self.current = Some(InFlight::Switch {
                    report: self.empty_report(&self.active, &self.active, now),
                    touched: ids.into_iter().collect(),
                    boot: true,
                });
            }
            Command::Switch(to) => {
                let from = self.active.clone();
                let mut report = self.empty_report(&from, &to, now);
                let mut touched = BTreeSet::new();
                if to != from {
                    report
                        .hooks
                        .extend(self.configs[&from].on_exit.iter().cloned());
                    let old: BTreeSet<String> = self.configs[&from]
                        .entities
                        .iter()
                        .map(|e| e.id.clone())
                        .collect();
                    let new: BTreeSet<String> = self.configs[&to]
                        .entities
                        .iter()
                        .map(|e| e.id.clone())
                        .collect();
                    self.active = to.clone();
                    for id in old.difference(&new) {
                        self.want(id, Goal::Stop, now);
                        touched.insert(id.clone());
                    }
                    for id in new.difference(&old) {
                        self.want(id, Goal::Run, now);
                        touched.insert(id.clone());
                    }
                    self.events.push(OrchestratorEvent::Activated {
                        from: Some(from),
                        to,
                    });
                }
                self.current = Some(InFlight::Switch {
                    report,
                    touched,
                    boot: false,
                });
            }
            Command::Restart(id) => {
                if self.active().entity(&id).is_none() {
                    tracing::warn!(entity = %id, "restart dropped: entity left the active configuration");
                    return;
                }
                self.want(&id, Goal::Restart, now);
                if let Some(slot) = self.slots.get_mut(&id) {
                    slot.attempts = 0;
                }
                self.current = Some(InFlight::Restart {
                    report: RestartReport {
                        entity: id,
                        requested_at: now,
                        finished_at: now,
                        attempts: 0,
                        outcome: ProcessState::Stopped,
                        changes: Vec::new(),
                    },
                });
            }
            Command::Shutdown => {
                let ids: Vec<String> = self.slots.keys().cloned().collect();
                for id in &ids {
                    self.want(id, Goal::Stop, now);
                }
                self.current = Some(InFlight::Shutdown);
            }
        }
    }

    fn empty_report(&self, from: &str, to: &str, now: Nanos) -> TransitionReport {
        TransitionReport {
            from: from.to_string(),
            to: to.to_string(),
            started_at: now,
            finished_at: now,
            changes: Vec::new(),
            stopped: Vec::new(),
            started: Vec::new(),
            failed: Vec::new(),
            hooks: Vec::new(),
        }
    }

    fn want(&mut self, id: &str, goal: Goal, now: Nanos) {
        if let Some(slot) = self.slots.get_mut(id) {
            slot.goal = goal;
            slot.forced_at = None;
            if goal != Goal::Stop {
                slot.attempts = 0;
            }
            return;
        }
        if goal == Goal::Stop {
            return;
        }
        let spec = self
            .active()
            .entity(id)
            .expect("wanted entity is declared")
            .clone();
        self.slots.insert(
            id.to_string(),
            Slot {
                spec,
                state: ProcessState::Stopped,
                since: now,
                last_heartbeat: None,
                goal: Goal::Run,
                attempts: 0,
                forced_at: None,
            },
        );
    }

    fn drive_all(&mut self, now: Nanos) -> bool {
        let ids: Vec<String> = self
            .slots
            .iter()
            .filter(|(_, s)| s.goal != Goal::Idle)
            .map(|(id, _)| id.clone())
            .collect();
        let mut any = false;
        for id in ids {
            any |= self.drive(&id, now);
        }
        any
    }

    fn transition(&mut self, id: &str, to: ProcessState, now: Nanos) {
        let slot = self.slots.get_mut(id).expect("slot exists");
        debug_assert!(
            slot.state.can_transition(to),
            "{:?} -> {:?}",
            slot.state,
            to
        );
        let change = StateChange {
            entity: id.to_string(),
            from: slot.state,
            to,
            t: now.max(slot.since),
        };
        slot.state = to;
        slot.since = change.t;
        match &mut self.current {
            Some(InFlight::Switch { report, .. }) => report.changes.push(change.clone()),
            Some(InFlight::Restart { report }) => report.changes.push(change.clone()),
            _ => {}
        }
        self.events.push(OrchestratorEvent::StateChanged(change));
    }

    fn purge_scratch(&self, id: &str) -> Result<Option<PathBuf>, OrchestratorError> {
        let Some(root) = &self.scratch_root else {
            return Ok(None);
        };
        let dir = root.join(id);
        let purge = |source| OrchestratorError::Purge {
            entity: id.to_string(),
            source,
        };
        match std::fs::remove_dir_all(&dir) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(purge(e)),
        }
        std::fs::create_dir_all(&dir).map_err(purge)?;
        Ok(Some(dir))
    }

    fn launch(&mut self, id: &str, now: Nanos) {
        let clean = self.slots[id].spec.clean_state;
        let scratch = if clean {
            self.purge_scratch(id)
        } else {
            Ok(self.scratch_root.as_ref().map(|r| r.join(id)))
        };
        let slot = self.slots.get_mut(id).expect("slot exists");
        slot.attempts += 1;
        slot.last_heartbeat = None;
        let started = match scratch {
            Ok(dir) => {
                if let Some(d) = dir.as_deref().filter(|_| !clean) {
                    let _ = std::fs::create_dir_all(d);
                }
                let spec = slot.spec.clone();
                self.runner
                    .start(&spec, dir.as_deref().map(Path::new))
                    .map_err(|e| tracing::warn!(entity = %id, error = %e, "start failed"))
                    .is_ok()
            }
            Err(e) => {
                tracing::warn!(entity = %id, error = %e, "scratch purge failed");
                false
            }
        };
        self.transition(id, ProcessState::Starting, now);
        if !started {
            self.transition(id, ProcessState::Failed, now);
        }
    }

    fn drive(&mut self, id: &str, now: Nanos) -> bool {
        let (state, goal, since, attempts, grace) = {
            let s = &self.slots[id];
            (
                s.state,
                s.goal,
                s.since,
                s.attempts,
                secs(s.spec.startup_grace_s),
            )
        };
        use ProcessState::*;
        match (goal, state) {
            (Goal::Idle, _) => false,
            (Goal::Run, Stopped) => {
                self.launch(id, now);
                true
            }
            (Goal::Run, Starting) => match self.runner.probe(id) {
                Probe::Ready => {
                    self.started(id, now);
                    true
                }
                Probe::Alive if now.saturating_sub(since) >= grace => {
                    self.started(id, now);
                    true
                }
                Probe::Alive => false,
                Probe::Exited => {
                    self.transition(id, Failed, now);
                    true
                }
            },
            (Goal::Run, Failed) => {
                if attempts < MAX_START_ATTEMPTS {
                    self.transition(id, Stopped, now);
                } else {
                    tracing::warn!(entity = %id, attempts, "entity failed to start");
                    self.slots.get_mut(id).expect("slot").goal = Goal::Idle;
                }
                true
            }
            (Goal::Run, Running) => {
                self.slots.get_mut(id).expect("slot").goal = Goal::Idle;
                true
            }
            (Goal::Run | Goal::Restart, Stopping) | (Goal::Stop, Stopping) => {
                self.drive_stopping(id, now, since)
            }
            (Goal::Stop | Goal::Restart, Running | Starting) => {
                if let Err(e) = self.runner.request_stop(id) {
                    tracing::warn!(entity = %id, error = %e, "stop request failed");
                }
                self.slots.get_mut(id).expect("slot").forced_at = None;
                self.transition(id, Stopping, now);
                true
            }
            (Goal::Stop, Stopped | Failed) => {
                self.slots.get_mut(id).expect("slot").goal = Goal::Idle;
                if state == Stopped && self.active().entity(id).is_none() {
                    self.slots.remove(id);
                }
                true
            }
            (Goal::Restart, Failed) => {
                if self.runner.probe(id) != Probe::Exited {
                    let _ = self.runner.kill(id);
                }
                self.transition(id, Stopped, now);
                true
            }
            (Goal::Restart, Stopped) => {
                let slot = self.slots.get_mut(id).expect("slot");
                slot.goal = Goal::Run;
                slot.attempts = 0;
                true
            }
        }
    }

    fn drive_stopping(&mut self, id: &str, now: Nanos, since: Nanos) -> bool {
        if self.runner.probe(id) == Probe::Exited {
            self.transition(id, ProcessState::Stopped, now);
            return true;
        }
        let forced_at = self.slots[id].forced_at;
        match forced_at {
            None if now.saturating_sub(since) >= self.stop_timeout => {
                tracing::warn!(entity = %id, "graceful stop timed out, killing");
                if let Err(e) = self.runner.kill(id) {
                    tracing::warn!(entity = %id, error = %e, "kill failed");
                }
                self.slots.get_mut(id).expect("slot").forced_at = Some(now);
                true
            }
            Some(t) if now.saturating_sub(t) >= self.stop_timeout => {
                tracing::error!(entity = %id, "entity survived a forced stop");
                self.transition(id, ProcessState::Failed, now);
                let slot = self.slots.get_mut(id).expect("slot");
                if slot.goal == Goal::Stop {
                    slot.goal = Goal::Idle;
                }
                true
            }
            _ => false,
        }
    }

    fn started(&mut self, id: &str, now: Nanos) {
        self.transition(id, ProcessState::Running, now);
        let slot = self.slots.get_mut(id).expect("slot");
        slot.last_heartbeat = Some(now);
        slot.goal = Goal::Idle;
    }

    fn try_finish(&mut self, now: Nanos) -> bool {
        let done = match &self.current {
            None => return false,
            Some(InFlight::Switch { touched, .. }) => touched
                .iter()
                .all(|id| self.slots.get(id).is_none_or(|s| s.goal == Goal::Idle)),
            Some(InFlight::Restart { report }) => self
                .slots
                .get(&report.entity)
                .is_none_or(|s| s.goal == Goal::Idle),
            Some(InFlight::Shutdown) => self.slots.values().all(|s| s.goal == Goal::Idle),
        };
        if !done {
            return false;
        }
        match self.current.take().expect("in flight") {
            InFlight::Switch {
                mut report,
                touched,
                boot,
            } => {
                report.finished_at = now;
                for id in &touched {
                    match self.slots.get(id).map(|s| s.state) {
                        None | Some(ProcessState::Stopped) => report.stopped.push(id.clone()),
                        Some(ProcessState::Running) => report.started.push(id.clone()),
                        Some(ProcessState::Failed) => report.failed.push(id.clone()),
                        Some(_) => {}
                    }
                }
                if !report.is_empty() || boot {
                    report.hooks.extend(self.active().on_enter.iter().cloned());
                }
                self.events.push(OrchestratorEvent::SwitchCompleted(report));
            }
            InFlight::Restart { mut report } => {
                report.finished_at = now;
                if let Some(s) = self.slots.get(&report.entity) {
                    report.outcome = s.state;
                    report.attempts = s.attempts;
                }
                self.events
                    .push(OrchestratorEvent::RestartCompleted(report));
            }
            InFlight::Shutdown => {
                self.slots.retain(|_, s| s.state != ProcessState::Stopped);
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::{FakeBehavior, FakeRunner, ProcessDescriptor, RunnerCall};

    fn entity(id: &str) -> EntitySpec {
        EntitySpec::new(id, ProcessDescriptor::new(format!("/opt/robot/{id}")))
    }

    fn set() -> ConfigurationSet {
        ConfigurationSet {
            initial: "normal".into(),
            configurations: vec![
                Configuration::new(
                    "normal",
                    vec![entity("base"), entity("localization"), entity("navigation")],
                ),
                Configuration::new("charging", vec![entity("base")]),
                Configuration::new(
                    "mapping",
                    vec![entity("base"), entity("navigation"), entity("slam")],
                ),
            ],
        }
    }

    fn booted() -> Orchestrator<FakeRunner> {
        let mut o = Orchestrator::new(set(), FakeRunner::new()).unwrap();
        o.step(0);
        o.drain_events();
        o
    }

    fn last_switch(events: &[OrchestratorEvent]) -> &TransitionReport {
        events
            .iter()
            .rev()
            .find_map(|e| match e {
                OrchestratorEvent::SwitchCompleted(r) => Some(r),
                _ => None,
            })
            .expect("switch completed")
    }

    #[test]
    fn boot_starts_initial_configuration() {
        let o = booted();
        assert_eq!(
            o.running_set(),
            BTreeSet::from(["base", "localization", "navigation"])
        );
    }

    #[test]
    fn normal_to_charging_stops_localization() {
        let mut o = booted();
        o.switch_configuration("charging").unwrap();
        o.step(secs(1.0));
        let ev = o.drain_events();
        let r = last_switch(&ev);
        assert_eq!(r.stopped, ["localization", "navigation"]);
        assert!(r.started.is_empty());
        assert_eq!(o.running_set(), BTreeSet::from(["base"]));
        assert_eq!(o.state("localization"), None);
    }

    #[test]
    fn identical_switch_is_empty() {
        let mut o = booted();
        o.switch_configuration("normal").unwrap();
        o.step(secs(1.0));
        let ev = o.drain_events();
        assert!(last_switch(&ev).is_empty());
        assert!(!ev
            .iter()
            .any(|e| matches!(e, OrchestratorEvent::Activated { .. })));
    }

    #[test]
    fn normal_to_mapping_is_one_stop_one_start() {
        let mut o = booted();
        o.switch_configuration("mapping").unwrap();
        o.step(secs(1.0));
        let ev = o.drain_events();
        let r = last_switch(&ev);
        assert_eq!(r.stopped, ["localization"]);
        assert_eq!(r.started, ["slam"]);
    }

    #[test]
    fn stubborn_entity_is_killed_after_timeout() {
        let mut o = booted();
        o.runner_mut().set_behavior(
            "localization",
            FakeBehavior {
                ignore_stop: true,
                ..Default::default()
            },
        );
        o.switch_configuration("charging").unwrap();
        o.step(secs(1.0));
        assert_eq!(o.state("localization"), Some(ProcessState::Stopping));
        o.step(secs(6.0));
        assert_eq!(o.state("localization"), None);
        assert!(o
            .runner()
            .calls()
            .contains(&RunnerCall::Kill("localization".into())));
    }

    #[test]
    fn unkillable_entity_fails_and_switch_continues() {
        let mut o = booted();
        o.runner_mut().set_behavior(
            "localization",
            FakeBehavior {
                unkillable: true,
                ..Default::default()
            },
        );
        o.switch_configuration("charging").unwrap();
        for s in 1..=12 {
            o.step(secs(s as f64));
        }
        let ev = o.drain_events();
        let r = last_switch(&ev);
        assert_eq!(r.failed, ["localization"]);
        assert_eq!(o.active().name, "charging");
    }

    #[test]
    fn healthy_restart_is_one_stop_start_pair() {
        let mut o = booted();
        o.restart_entity("navigation").unwrap();
        o.step(secs(1.0));
        let ev = o.drain_events();
        let r = ev
            .iter()
            .find_map(|e| match e {
                OrchestratorEvent::RestartCompleted(r) => Some(r),
                _ => None,
            })
            .unwrap();
        assert_eq!(r.outcome, ProcessState::Running);
        assert_eq!(r.attempts, 1);
        let calls: Vec<_> = o
            .runner()
            .calls()
            .iter()
            .filter(
                |c| matches!(c, RunnerCall::Stop(id) | RunnerCall::Start(id) if id == "navigation"),
            )
            .collect();
        // Boot start, then exactly one stop and one start.
        assert_eq!(calls.len(), 3);
    }

    #[test]
    fn crash_looping_entity_fails_after_two_attempts() {
        let mut o = booted();
        o.runner_mut().set_behavior(
            "navigation",
            FakeBehavior {
                always_crash: true,
                ..Default::default()
            },
        );
        o.runner_mut().crash("navigation");
        o.restart_entity("navigation").unwrap();
        o.step(secs(1.0));
        let ev = o.drain_events();
        let r = ev
            .iter()
            .find_map(|e| match e {
                OrchestratorEvent::RestartCompleted(r) => Some(r),
                _ => None,
            })
            .unwrap();
        assert_eq!(r.outcome, ProcessState::Failed);
        assert_eq!(r.attempts, 2);
        let live = o.liveness_reports(secs(1.0), secs(3.0));
        let nav = live.iter().find(|r| &*r.entity_id == "navigation").unwrap();
        assert_eq!(nav.level, MonitorLevel::Error);
    }

    #[test]
    fn undeclared_restart_is_drift() {
        let mut o = booted();
        assert!(matches!(
            o.restart_entity("slam"),
            Err(OrchestratorError::UndeclaredEntity { .. })
        ));
    }

    #[test]
    fn killed_entity_goes_error_within_timeout() {
        let mut o = booted();
        let timeout = secs(3.0);
        o.supervise(0);
        o.runner_mut().crash("base");
        for s in 1..=4u64 {
            o.supervise(secs(s as f64));
        }
        let at = |o: &Orchestrator<FakeRunner>, t| {
            o.liveness_reports(t, timeout)
                .into_iter()
                .find(|r| &*r.entity_id == "base")
                .unwrap()
                .level
        };
        assert_eq!(at(&o, secs(3.0)), MonitorLevel::Ok);
        assert_eq!(at(&o, secs(3.0) + 1), MonitorLevel::Error);
        assert_eq!(at(&o, secs(3.0) + 1 - 1), MonitorLevel::Ok);
        let others: Vec<_> = o
            .liveness_reports(secs(4.0), timeout)
            .into_iter()
            .filter(|r| &*r.entity_id != "base")
            .collect();
        assert!(others.iter().all(|r| r.level == MonitorLevel::Ok));
    }

    #[test]
    fn stopping_entity_is_excluded_from_liveness() {
        let mut o = booted();
        o.runner_mut().set_behavior(
            "navigation",
            FakeBehavior {
                ignore_stop: true,
                ..Default::default()
            },
        );
        o.restart_entity("navigation").unwrap();
        o.step(secs(10.0));
        assert_eq!(o.state("navigation"), Some(ProcessState::Stopping));
        let live = o.liveness_reports(secs(100.0), secs(3.0));
        let nav = live.iter().find(|r| &*r.entity_id == "navigation").unwrap();
        assert_eq!(nav.level, MonitorLevel::Ok);
    }

    #[test]
    fn clean_state_restart_leaves_no_residue() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = Orchestrator::new(set(), FakeRunner::new())
            .unwrap()
            .with_scratch_root(dir.path());
        o.step(0);
        let mut outputs = Vec::new();
        for i in 1..=2 {
            o.restart_entity("base").unwrap();
            o.step(secs(i as f64));
            outputs.push(o.runner().startup_output("base").unwrap().to_vec());
        }
        assert_eq!(outputs[0], outputs[1]);
        assert!(outputs[0].is_empty());
    }
}
