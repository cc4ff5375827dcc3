use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::RecoveryAction;
use crate::monitor::MonitorLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

impl fmt::Display for TickStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TickStatus::Success => "SUCCESS",
            TickStatus::Failure => "FAILURE",
            TickStatus::Running => "RUNNING",
        })
    }
}

/// Predicate evaluated by a condition leaf against the current snapshot only.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// Succeeds when any bound monitor is at or above `level`.
    AnyAtLeast {
        class: Arc<str>,
        monitors: Vec<Arc<str>>,
        level: MonitorLevel,
    },
    /// Always succeeds; closes the root fallback when nothing is wrong.
    Always,
}

/// Node of the arbiter tree. Nodes carry no runtime state.
#[derive(Debug, Clone, PartialEq)]
pub enum BtNode {
    /// First child result that is not `Failure`.
    Fallback(Vec<BtNode>),
    /// First child result that is not `Success`.
    Sequence(Vec<BtNode>),
    Condition(Predicate),
    Action {
        class: Arc<str>,
        action: RecoveryAction,
    },
    /// Fallback over a recovery chain ordered cheap to expensive; picks the next
    /// action from the explicit dispatch history instead of per-child status.
    Escalation {
        class: Arc<str>,
        children: Vec<BtNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("composite node without children")]
    EmptyComposite,
    #[error("escalation for `{0}` may only contain action leaves")]
    EscalationChild(String),
    #[error("condition references undeclared monitor `{0}`")]
    UndeclaredMonitor(String),
}

impl BtNode {
    pub fn children(&self) -> &[BtNode] {
        match self {
            BtNode::Fallback(c) | BtNode::Sequence(c) | BtNode::Escalation { children: c, .. } => c,
            BtNode::Condition(_) | BtNode::Action { .. } => &[],
        }
    }

    /// Structural invariants: composites are non-empty and escalations hold only actions.
    pub fn validate(&self) -> Result<(), TreeError> {
        match self {
            BtNode::Fallback(c) | BtNode::Sequence(c) if c.is_empty() => {
                Err(TreeError::EmptyComposite)
            }
            BtNode::Escalation { class, children } => {
                if children.is_empty() {
                    return Err(TreeError::EmptyComposite);
                }
                if children.iter().any(|c| !matches!(c, BtNode::Action { .. })) {
                    return Err(TreeError::EscalationChild(class.to_string()));
                }
                Ok(())
            }
            _ => self.children().iter().try_for_each(BtNode::validate),
        }
    }

    /// Check every condition against a declared monitor set.
    pub fn validate_against(
        &self,
        declared: impl Fn(&str) -> bool + Copy,
    ) -> Result<(), TreeError> {
        self.validate()?;
        self.visit(&mut |n| {
            if let BtNode::Condition(Predicate::AnyAtLeast { monitors, .. }) = n {
                if let Some(m) = monitors.iter().find(|m| !declared(m)) {
                    return Err(TreeError::UndeclaredMonitor(m.to_string()));
                }
            }
            Ok(())
        })
    }

    fn visit<E>(&self, f: &mut impl FnMut(&BtNode) -> Result<(), E>) -> Result<(), E> {
        f(self)?;
        self.children().iter().try_for_each(|c| c.visit(f))
    }

    /// Class ids in priority order (left to right).
    pub fn class_order(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_classes(&mut out);
        out
    }

    fn collect_classes<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let BtNode::Escalation { class, .. } = self {
            out.push(class.as_ref());
        }
        for c in self.children() {
            c.collect_classes(out);
        }
    }

    pub fn len(&self) -> usize {
        1 + self.children().iter().map(BtNode::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
