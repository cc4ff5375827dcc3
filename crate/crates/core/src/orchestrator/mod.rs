//! Configuration management and entity lifecycle.

mod config;
mod engine;
mod fake;
mod runner;
mod state;
mod subprocess;

pub use config::{
    ChannelSpec, ConfigError, Configuration, ConfigurationSet, EntitySpec, ProcessDescriptor,
};
pub use engine::{
    EntityStatus, Heartbeat, Orchestrator, OrchestratorError, OrchestratorEvent, RestartReport,
    TransitionReport, DEFAULT_STOP_TIMEOUT_S, MAX_START_ATTEMPTS,
};
pub use fake::{FakeBehavior, FakeRunner, RunnerCall};
pub use runner::{Probe, Runner, RunnerError};
pub use state::{ProcessState, StateChange};
pub use subprocess::SubprocessRunner;
