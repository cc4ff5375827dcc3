//! Stateless reactive behavior-tree arbiter for recovery dispatch.
//!
//! The tree is rebuilt only on configuration changes and holds no runtime state;
//! escalation memory lives in an explicit [`DispatchHistory`] passed to every tick.

mod action;
mod definition;
mod escalate;
mod history;
mod node;
mod tick;

pub use action::{ActionError, RecoveryAction, RecoveryKind, DEFAULT_BUDGET, DEFAULT_COOLDOWN_S};
pub use definition::{
    build_tree, BuildError, ClassDef, ErrorCategory, StormParams, TreeDefinition,
};
pub use escalate::{escalate, escalation_step, EscalationStep};
pub use history::{detect_restart_storm, storm_active, Dispatch, DispatchHistory};
pub use node::{BtNode, Predicate, TickStatus, TreeError};
pub use tick::{tick, ActionSink, Arbiter, RecordingSink, RunningAction, TickInput, TickOutcome};
