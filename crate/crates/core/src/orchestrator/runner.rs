use std::path::Path;

use super::config::EntitySpec;

/// What a runner can tell about an entity without blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// Alive and has signalled readiness.
    Ready,
    /// Alive; readiness unknown.
    Alive,
    /// Not running (never started, exited, or killed).
    Exited,
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("failed to launch `{entity}`: {source}")]
    Spawn {
        entity: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to signal `{entity}`: {source}")]
    Signal {
        entity: String,
        #[source]
        source: std::io::Error,
    },
}

/// Executes entities. Every call must return promptly; the orchestrator polls.
pub trait Runner {
    fn start(&mut self, spec: &EntitySpec, scratch: Option<&Path>) -> Result<(), RunnerError>;
    /// Ask the entity to exit.
    fn request_stop(&mut self, id: &str) -> Result<(), RunnerError>;
    fn kill(&mut self, id: &str) -> Result<(), RunnerError>;
    fn probe(&mut self, id: &str) -> Probe;
}
