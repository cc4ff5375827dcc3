//! In-memory runner for the simulator and tests.

use std::collections::BTreeMap;
use std::path::Path;

use super::config::EntitySpec;
use super::runner::{Probe, Runner, RunnerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FakeBehavior {
    /// The next `n` starts exit immediately.
    pub failing_starts: u32,
    /// Every start exits immediately.
    pub always_crash: bool,
    /// Ignores stop requests; only a kill ends it.
    pub ignore_stop: bool,
    /// Survives kills as well.
    pub unkillable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunnerCall {
    Start(String),
    Stop(String),
    Kill(String),
}

#[derive(Debug, Clone, Default)]
struct FakeProc {
    alive: bool,
    starts: u32,
}

#[derive(Debug, Clone, Default)]
pub struct FakeRunner {
    procs: BTreeMap<String, FakeProc>,
    behavior: BTreeMap<String, FakeBehavior>,
    calls: Vec<RunnerCall>,
    startup_output: BTreeMap<String, Vec<String>>,
    record_calls: bool,
}

impl FakeRunner {
    pub fn new() -> Self {
        Self {
            record_calls: true,
            ..Self::default()
        }
    }

    /// A runner that keeps no call log, for long simulations.
    pub fn quiet() -> Self {
        Self::default()
    }

    pub fn set_behavior(&mut self, id: &str, behavior: FakeBehavior) {
        self.behavior.insert(id.to_string(), behavior);
    }

    pub fn behavior_mut(&mut self, id: &str) -> &mut FakeBehavior {
        self.behavior.entry(id.to_string()).or_default()
    }

    /// Kill an entity from outside the orchestrator.
    pub fn crash(&mut self, id: &str) {
        if let Some(p) = self.procs.get_mut(id) {
            p.alive = false;
        }
    }

    pub fn is_alive(&self, id: &str) -> bool {
        self.procs.get(id).is_some_and(|p| p.alive)
    }

    pub fn alive(&self) -> impl Iterator<Item = &str> {
        self.procs
            .iter()
            .filter(|(_, p)| p.alive)
            .map(|(id, _)| id.as_str())
    }

    pub fn starts(&self, id: &str) -> u32 {
        self.procs.get(id).map_or(0, |p| p.starts)
    }

    pub fn calls(&self) -> &[RunnerCall] {
        &self.calls
    }

    /// Sorted scratch listing observed at the most recent start.
    pub fn startup_output(&self, id: &str) -> Option<&[String]> {
        self.startup_output.get(id).map(Vec::as_slice)
    }

    fn log(&mut self, call: RunnerCall) {
        if self.record_calls {
            self.calls.push(call);
        }
    }
}

impl Runner for FakeRunner {
    fn start(&mut self, spec: &EntitySpec, scratch: Option<&Path>) -> Result<(), RunnerError> {
        self.log(RunnerCall::Start(spec.id.clone()));
        if let Some(dir) = scratch {
            // Emulates a program that reports leftover state and then leaves some behind.
            let mut listing: Vec<String> = std::fs::read_dir(dir)
                .map(|rd| {
                    rd.filter_map(|e| e.ok())
                        .map(|e| e.file_name().to_string_lossy().into_owned())
                        .collect()
                })
                .unwrap_or_default();
            listing.sort();
            self.startup_output.insert(spec.id.clone(), listing);
            let n = self.starts(&spec.id) + 1;
            std::fs::write(dir.join(format!("residue-{n}")), b"x").map_err(|source| {
                RunnerError::Spawn {
                    entity: spec.id.clone(),
                    source,
                }
            })?;
        }
        let behavior = self.behavior.entry(spec.id.clone()).or_default();
        let crashes = behavior.always_crash || behavior.failing_starts > 0;
        behavior.failing_starts = behavior.failing_starts.saturating_sub(1);
        let p = self.procs.entry(spec.id.clone()).or_default();
        p.starts += 1;
        p.alive = !crashes;
        Ok(())
    }

    fn request_stop(&mut self, id: &str) -> Result<(), RunnerError> {
        self.log(RunnerCall::Stop(id.to_string()));
        let b = self.behavior.get(id).copied().unwrap_or_default();
        if !b.ignore_stop && !b.unkillable {
            self.crash(id);
        }
        Ok(())
    }

    fn kill(&mut self, id: &str) -> Result<(), RunnerError> {
        self.log(RunnerCall::Kill(id.to_string()));
        if !self.behavior.get(id).is_some_and(|b| b.unkillable) {
            self.crash(id);
        }
        Ok(())
    }

    fn probe(&mut self, id: &str) -> Probe {
        if self.is_alive(id) {
            Probe::Ready
        } else {
            Probe::Exited
        }
    }
}
