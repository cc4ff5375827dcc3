//! The assembled supervision loop: orchestrator, monitor aggregation, arbiter and
//! intervention sessions, shared by the simulator and the daemon.

use std::path::Path;

use crate::arbiter::{
    ActionSink, Arbiter, BuildError, ErrorCategory, RunningAction, TickOutcome, TreeDefinition,
};
use crate::monitor::{AggregatedStatus, Aggregator, MonitorReport, MonitorSpec};
use crate::orchestrator::{
    ConfigurationSet, Orchestrator, OrchestratorError, OrchestratorEvent, Runner,
};
use crate::session::SessionManager;
use crate::time::Nanos;

#[derive(Debug, thiserror::Error)]
pub enum StackError {
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error("arbiter tree for `{configuration}`: {source}")]
    Tree {
        configuration: String,
        #[source]
        source: BuildError,
    },
    #[error("cannot read tree `{path}`: {message}")]
    TreeFile { path: String, message: String },
}

/// Resolve a tree reference: `builtin:normal`, `builtin:charging` or a TOML file.
/// No reference means the normal tree.
pub fn resolve_tree(reference: Option<&str>) -> Result<TreeDefinition, StackError> {
    match reference {
        None | Some("builtin:normal") => Ok(TreeDefinition::default_normal()),
        Some("builtin:charging") => Ok(TreeDefinition::default_charging()),
        Some(path) => {
            let err = |message: String| StackError::TreeFile {
                path: path.to_string(),
                message,
            };
            let text = std::fs::read_to_string(Path::new(path)).map_err(|e| err(e.to_string()))?;
            TreeDefinition::from_toml(&text).map_err(|e| err(e.to_string()))
        }
    }
}

#[derive(Debug)]
pub struct SupervisionStack<R> {
    pub orchestrator: Orchestrator<R>,
    pub aggregator: Aggregator,
    pub arbiter: Arbiter,
    pub sessions: SessionManager,
    monitors: Vec<MonitorSpec>,
}

impl<R: Runner> SupervisionStack<R> {
    pub fn new(
        set: ConfigurationSet,
        runner: R,
        sessions: SessionManager,
    ) -> Result<Self, StackError> {
        let orchestrator = Orchestrator::new(set, runner)?;
        let monitors = orchestrator.declared_monitors();
        let aggregator = Aggregator::new(&monitors);
        let active = orchestrator.active();
        let definition = resolve_tree(active.tree.as_deref())?;
        let arbiter =
            Arbiter::new(definition, monitors.iter().map(|m| m.id.as_str())).map_err(|source| {
                StackError::Tree {
                    configuration: active.name.clone(),
                    source,
                }
            })?;
        Ok(Self {
            orchestrator,
            aggregator,
            arbiter,
            sessions,
            monitors,
        })
    }

    /// Monitors declared by the active configuration.
    pub fn monitors(&self) -> &[MonitorSpec] {
        &self.monitors
    }

    pub fn is_declared(&self, monitor_id: &str) -> bool {
        self.aggregator.is_declared(monitor_id)
    }

    pub fn category(&self, class: &str) -> ErrorCategory {
        self.arbiter
            .definition()
            .class(class)
            .map(|c| c.category)
            .unwrap_or_default()
    }

    /// Advance the orchestrator and follow configuration activations. Returns its events.
    pub fn step_orchestrator(&mut self, now: Nanos) -> Result<Vec<OrchestratorEvent>, StackError> {
        self.orchestrator.step(now);
        self.orchestrator.supervise(now);
        let events = self.orchestrator.drain_events();
        if events
            .iter()
            .any(|e| matches!(e, OrchestratorEvent::Activated { .. }))
        {
            self.activate()?;
        }
        Ok(events)
    }

    fn activate(&mut self) -> Result<(), StackError> {
        self.monitors = self.orchestrator.declared_monitors();
        self.aggregator.declare(&self.monitors);
        let active = self.orchestrator.active();
        let definition = resolve_tree(active.tree.as_deref())?;
        self.arbiter
            .reconfigure(definition, self.monitors.iter().map(|m| m.id.as_str()))
            .map_err(|source| StackError::Tree {
                configuration: active.name.clone(),
                source,
            })
    }

    /// Feed one report. Reports of undeclared monitors are dropped and counted.
    pub fn ingest(&mut self, report: MonitorReport) -> bool {
        self.aggregator.ingest(report).is_ok()
    }

    /// Snapshot the monitors and tick the arbiter once.
    pub fn tick<S: ActionSink>(
        &mut self,
        now: Nanos,
        running: Option<&RunningAction>,
        sink: &mut S,
    ) -> (AggregatedStatus, TickOutcome) {
        let status = self.aggregator.snapshot(now);
        let outcome = self.arbiter.tick(&status, running, now, sink);
        (status, outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arbiter::{RecordingSink, RecoveryKind};
    use crate::monitor::{Band, MonitorKind};
    use crate::orchestrator::{Configuration, EntitySpec, FakeRunner, ProcessDescriptor};
    use crate::time::secs;

    fn set() -> ConfigurationSet {
        let clock = MonitorSpec::new(
            "clock_skew",
            "host",
            MonitorKind::ClockSkew {
                peer: "server".into(),
                band: Band::high_is_bad(50.0, 200.0).unwrap(),
            },
        );
        let entity = |id: &str| {
            EntitySpec::new(id, ProcessDescriptor::new(id)).with_output(format!("{id}_out"), 10.0)
        };
        let mut a = Configuration::new("a", vec![entity("x"), entity("y")]);
        a.tree = Some("builtin:charging".into());
        a.monitors = vec![clock.clone()];
        let mut b = Configuration::new("b", vec![entity("x"), entity("z")]);
        b.tree = Some("builtin:charging".into());
        b.monitors = vec![clock];
        ConfigurationSet {
            initial: "a".into(),
            configurations: vec![a, b],
        }
    }

    #[test]
    fn switch_redeclares_monitors() {
        let mut stack = SupervisionStack::new(
            set(),
            FakeRunner::new(),
            SessionManager::new(Vec::new(), "http://h"),
        )
        .unwrap();
        stack.step_orchestrator(0).unwrap();
        assert!(stack.is_declared("liveness:y"));
        stack.orchestrator.switch_configuration("b").unwrap();
        stack.step_orchestrator(secs(1.0)).unwrap();
        assert!(stack.is_declared("liveness:z"));
        assert!(!stack.is_declared("liveness:y"));
        assert!(!stack.ingest(MonitorReport::with_level(
            "liveness:y",
            "y",
            0.0,
            crate::monitor::Unit::Seconds,
            crate::monitor::MonitorLevel::Ok,
            secs(1.0),
            "",
        )));
    }

    #[test]
    fn dead_entity_gets_restarted() {
        let mut stack = SupervisionStack::new(
            set(),
            FakeRunner::new(),
            SessionManager::new(Vec::new(), "http://h"),
        )
        .unwrap();
        let timeout = secs(3.0);
        let mut dispatched = Vec::new();
        for s in 0..20u64 {
            let now = secs(s as f64);
            if s == 2 {
                stack.orchestrator.runner_mut().crash("y");
            }
            stack.step_orchestrator(now).unwrap();
            let reports = stack.orchestrator.liveness_reports(now, timeout);
            for r in reports {
                stack.ingest(r);
            }
            stack.ingest(MonitorReport::with_level(
                "clock_skew",
                "host",
                0.0,
                crate::monitor::Unit::Millis,
                crate::monitor::MonitorLevel::Ok,
                now,
                "",
            ));
            for spec in stack.monitors().to_vec() {
                if let MonitorKind::Rate { nominal_hz, .. } = spec.kind {
                    stack.ingest(MonitorReport::with_level(
                        spec.id.as_str(),
                        spec.entity.as_str(),
                        nominal_hz,
                        crate::monitor::Unit::Hertz,
                        crate::monitor::MonitorLevel::Ok,
                        now,
                        "",
                    ));
                }
            }
            let mut sink = RecordingSink::default();
            let (_, outcome) = stack.tick(now, None, &mut sink);
            if let Some(d) = outcome.dispatched {
                if d.action.action == RecoveryKind::RestartNode {
                    stack
                        .orchestrator
                        .restart_entity(d.target.as_deref().unwrap())
                        .unwrap();
                }
                dispatched.push((s, d));
            }
        }
        assert_eq!(dispatched.len(), 1, "{dispatched:?}");
        assert_eq!(dispatched[0].1.target.as_deref(), Some("y"));
        assert!(stack.orchestrator.runner().is_alive("y"));
    }
}
