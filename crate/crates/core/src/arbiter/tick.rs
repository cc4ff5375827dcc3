use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::RecoveryKind;
use super::definition::{build_tree, BuildError, StormParams, TreeDefinition};
use super::escalate::{escalation_step, EscalationStep};
use super::history::{Dispatch, DispatchHistory};
use super::node::{BtNode, Predicate, TickStatus};
use crate::monitor::{AggregatedStatus, MonitorLevel};
use crate::time::{secs, Nanos};

/// Handle of the recovery currently executing behind the action sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningAction {
    pub class: Arc<str>,
    pub action: RecoveryKind,
    pub since: Nanos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

/// Receiver of arbiter decisions. Must not block the ticker.
pub trait ActionSink {
    fn dispatch(&mut self, dispatch: &Dispatch);
    fn cancel(&mut self, running: &RunningAction);
}

/// Sink that only records what it was told; handy in tests and dry runs.
#[derive(Debug, Default, Clone)]
pub struct RecordingSink {
    pub dispatched: Vec<Dispatch>,
    pub cancelled: Vec<RunningAction>,
}

impl ActionSink for RecordingSink {
    fn dispatch(&mut self, dispatch: &Dispatch) {
        self.dispatched.push(dispatch.clone());
    }

    fn cancel(&mut self, running: &RunningAction) {
        self.cancelled.push(running.clone());
    }
}

/// Everything a tick may look at. Nothing else influences the decision.
#[derive(Debug, Clone, Copy)]
pub struct TickInput<'a> {
    pub status: &'a AggregatedStatus,
    pub history: &'a DispatchHistory,
    pub running: Option<&'a RunningAction>,
    pub now: Nanos,
    pub storm: StormParams,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutcome {
    pub status: Option<TickStatus>,
    pub dispatched: Option<Dispatch>,
    pub cancelled: Option<RunningAction>,
    /// Class whose subtree held the tree this tick.
    pub active_class: Option<Arc<str>>,
    /// Monitors referenced by conditions but missing from the snapshot.
    pub drift: Vec<String>,
}

struct TickState<'a, S: ActionSink> {
    input: TickInput<'a>,
    sink: &'a mut S,
    outcome: TickOutcome,
    trigger_entity: Option<String>,
}

/// Tick `tree` once against the current snapshot.
///
/// Fallback returns the first non-failure child, Sequence the first non-success one.
/// At most one recovery is dispatched. A running recovery whose class is not the one
/// holding the tree this tick (its error cleared, or a higher-priority class took
/// over) is cancelled.
pub fn tick<S: ActionSink>(tree: &BtNode, input: TickInput<'_>, sink: &mut S) -> TickOutcome {
    let mut state = TickState {
        input,
        sink,
        outcome: TickOutcome::default(),
        trigger_entity: None,
    };
    let status = eval(tree, &mut state);
    let mut outcome = state.outcome;
    outcome.status = Some(status);
    if let Some(running) = input.running {
        let keeps = outcome.active_class.as_deref() == Some(running.class.as_ref());
        if !keeps && outcome.cancelled.is_none() {
            state.sink.cancel(running);
            outcome.cancelled = Some(running.clone());
        }
    }
    outcome
}

fn eval<S: ActionSink>(node: &BtNode, st: &mut TickState<'_, S>) -> TickStatus {
    match node {
        BtNode::Fallback(children) => {
            for c in children {
                let s = eval(c, st);
                if s != TickStatus::Failure {
                    return s;
                }
            }
            TickStatus::Failure
        }
        BtNode::Sequence(children) => {
            for c in children {
                let s = eval(c, st);
                if s != TickStatus::Success {
                    return s;
                }
            }
            TickStatus::Success
        }
        BtNode::Condition(pred) => eval_condition(pred, st),
        BtNode::Action { class, action } => {
            if is_running(st, class, Some(action.action)) {
                st.outcome.active_class = Some(class.clone());
                return TickStatus::Running;
            }
            let history = st.input.history;
            let episode = history.episode(class);
            let ready = history.attempts(class, action.action, episode) < action.budget
                && history
                    .last_dispatch(class, action.action)
                    .is_none_or(|last| {
                        st.input.now.saturating_sub(last) >= secs(action.cooldown_s)
                    });
            if !ready {
                return TickStatus::Failure;
            }
            emit(st, class, action.clone());
            TickStatus::Running
        }
        BtNode::Escalation { class, children } => {
            if is_running(st, class, None) {
                st.outcome.active_class = Some(class.clone());
                return TickStatus::Running;
            }
            let chain: Vec<_> = children
                .iter()
                .filter_map(|c| match c {
                    BtNode::Action { action, .. } => Some(action.clone()),
                    _ => None,
                })
                .collect();
            match escalation_step(
                class,
                &chain,
                st.input.history,
                st.input.now,
                st.input.storm,
            ) {
                EscalationStep::Dispatch(action) => {
                    emit(st, class, action);
                    TickStatus::Running
                }
                EscalationStep::Wait => {
                    st.outcome.active_class = Some(class.clone());
                    TickStatus::Running
                }
                EscalationStep::Exhausted => TickStatus::Failure,
            }
        }
    }
}

fn eval_condition<S: ActionSink>(pred: &Predicate, st: &mut TickState<'_, S>) -> TickStatus {
    match pred {
        Predicate::Always => TickStatus::Success,
        Predicate::AnyAtLeast {
            monitors, level, ..
        } => {
            let mut hit = None;
            for m in monitors {
                match st.input.status.get(m) {
                    Some(r) if r.level >= *level => {
                        hit.get_or_insert_with(|| r.entity_id.to_string());
                    }
                    Some(_) => {}
                    None => {
                        tracing::warn!(monitor = %m, "condition references monitor missing from snapshot");
                        st.outcome.drift.push(m.to_string());
                    }
                }
            }
            match hit {
                Some(entity) => {
                    st.trigger_entity = Some(entity);
                    TickStatus::Success
                }
                None => TickStatus::Failure,
            }
        }
    }
}

fn is_running<S: ActionSink>(
    st: &TickState<'_, S>,
    class: &str,
    kind: Option<RecoveryKind>,
) -> bool {
    st.input
        .running
        .is_some_and(|r| r.class.as_ref() == class && kind.is_none_or(|k| k == r.action))
}

fn emit<S: ActionSink>(
    st: &mut TickState<'_, S>,
    class: &Arc<str>,
    action: super::action::RecoveryAction,
) {
    debug_assert!(st.outcome.dispatched.is_none(), "one dispatch per tick");
    if let Some(running) = st.input.running {
        if running.class != *class && st.outcome.cancelled.is_none() {
            st.sink.cancel(running);
            st.outcome.cancelled = Some(running.clone());
        }
    }
    let dispatch = Dispatch {
        t: st.input.now,
        class: class.clone(),
        episode: st.input.history.episode(class),
        action,
        target: st.trigger_entity.clone(),
    };
    st.sink.dispatch(&dispatch);
    st.outcome.active_class = Some(class.clone());
    st.outcome.dispatched = Some(dispatch);
}

struct ClassBinding {
    class: Arc<str>,
    monitors: Vec<Arc<str>>,
    level: MonitorLevel,
}

/// Arbiter runtime: the immutable tree plus the explicit dispatch history.
#[derive(Debug)]
pub struct Arbiter {
    definition: TreeDefinition,
    tree: BtNode,
    bindings: Vec<ClassBinding>,
    history: DispatchHistory,
}

impl std::fmt::Debug for ClassBinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassBinding")
            .field("class", &self.class)
            .finish()
    }
}

impl Arbiter {
    pub fn new<'a>(
        definition: TreeDefinition,
        declared: impl IntoIterator<Item = &'a str> + Clone,
    ) -> Result<Self, BuildError> {
        let (tree, bindings) = Self::compile(&definition, declared)?;
        Ok(Self {
            definition,
            tree,
            bindings,
            history: DispatchHistory::new(),
        })
    }

    fn compile<'a>(
        definition: &TreeDefinition,
        declared: impl IntoIterator<Item = &'a str> + Clone,
    ) -> Result<(BtNode, Vec<ClassBinding>), BuildError> {
        let tree = build_tree(definition, declared.clone())?;
        let bindings = definition
            .classes
            .iter()
            .map(|c| {
                Ok(ClassBinding {
                    class: Arc::from(c.id.as_str()),
                    monitors: c.resolve_monitors(declared.clone())?,
                    level: c.trigger,
                })
            })
            .collect::<Result<_, BuildError>>()?;
        Ok((tree, bindings))
    }

    /// Swap in a new tree. Escalation history carries over.
    pub fn reconfigure<'a>(
        &mut self,
        definition: TreeDefinition,
        declared: impl IntoIterator<Item = &'a str> + Clone,
    ) -> Result<(), BuildError> {
        let (tree, bindings) = Self::compile(&definition, declared)?;
        self.definition = definition;
        self.tree = tree;
        self.bindings = bindings;
        Ok(())
    }

    pub fn tree(&self) -> &BtNode {
        &self.tree
    }

    pub fn definition(&self) -> &TreeDefinition {
        &self.definition
    }

    pub fn history(&self) -> &DispatchHistory {
        &self.history
    }

    pub fn history_mut(&mut self) -> &mut DispatchHistory {
        &mut self.history
    }

    /// Classes whose condition holds in `status`.
    pub fn erroring_classes<'s>(
        &'s self,
        status: &'s AggregatedStatus,
    ) -> impl Iterator<Item = &'s str> + 's {
        self.bindings
            .iter()
            .filter(move |b| class_in_error(b, status))
            .map(|b| b.class.as_ref())
    }

    pub fn tick<S: ActionSink>(
        &mut self,
        status: &AggregatedStatus,
        running: Option<&RunningAction>,
        now: Nanos,
        sink: &mut S,
    ) -> TickOutcome {
        for b in &self.bindings {
            let in_error = class_in_error(b, status);
            self.history.observe(&b.class, in_error);
        }
        let input = TickInput {
            status,
            history: &self.history,
            running,
            now,
            storm: self.definition.storm,
        };
        let outcome = tick(&self.tree, input, sink);
        if let Some(d) = &outcome.dispatched {
            self.history.record(d.clone());
        }
        outcome
    }

    pub fn supervisor_resolved(&mut self, class: &str) {
        self.history.resolve_supervisor(class);
    }
}

fn class_in_error(b: &ClassBinding, status: &AggregatedStatus) -> bool {
    b.monitors
        .iter()
        .any(|m| status.level(m).is_some_and(|l| l >= b.level))
}
