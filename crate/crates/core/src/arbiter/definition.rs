//! Declarative arbiter tree definitions and the deterministic tree builder.
//!
//! A definition lists error classes in priority order. Each class binds a set of
//! monitors (exact ids, or a prefix ending in `*`) and a recovery chain ordered
//! from cheapest to most expensive.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::{ActionError, RecoveryAction, RecoveryKind};
use super::node::{BtNode, Predicate};
use crate::monitor::MonitorLevel;

/// Broad category of an error class. Navigation matters for recovery scoring.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Node,
    Localization,
    Navigation,
    Clock,
    Channel,
    Hardware,
    #[default]
    Other,
}

fn default_trigger() -> MonitorLevel {
    MonitorLevel::Error
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDef {
    pub id: String,
    #[serde(default)]
    pub category: ErrorCategory,
    pub monitors: Vec<String>,
    /// Minimum level at which the class counts as erroring.
    #[serde(default = "default_trigger")]
    pub trigger: MonitorLevel,
    pub chain: Vec<RecoveryAction>,
}

/// Restart-storm guard: `threshold` node restarts within `window_s` force a supervisor request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StormParams {
    pub window_s: f64,
    pub threshold: usize,
}

impl Default for StormParams {
    fn default() -> Self {
        Self {
            window_s: 180.0,
            threshold: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TreeDefinition {
    #[serde(default)]
    pub storm: StormParams,
    #[serde(default, rename = "class")]
    pub classes: Vec<ClassDef>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("class `{0}` has an empty recovery chain")]
    EmptyChain(String),
    #[error("class `{0}`: request_supervisor must be the last action of the chain")]
    SupervisorNotLast(String),
    #[error("class `{class}` references undeclared monitor `{monitor}`")]
    UnknownMonitor { class: String, monitor: String },
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("class `{class}`: {source}")]
    Action {
        class: String,
        #[source]
        source: ActionError,
    },
    #[error("storm guard needs a positive window and threshold")]
    Storm,
}

impl ClassDef {
    pub fn new(
        id: impl Into<String>,
        category: ErrorCategory,
        monitors: &[&str],
        chain: Vec<RecoveryAction>,
    ) -> Self {
        Self {
            id: id.into(),
            category,
            monitors: monitors.iter().map(|m| m.to_string()).collect(),
            trigger: MonitorLevel::Error,
            chain,
        }
    }

    /// Expand monitor patterns against the declared monitor ids.
    pub fn resolve_monitors<'a>(
        &self,
        declared: impl IntoIterator<Item = &'a str> + Clone,
    ) -> Result<Vec<Arc<str>>, BuildError> {
        let mut out = Vec::new();
        for pattern in &self.monitors {
            let before = out.len();
            if let Some(prefix) = pattern.strip_suffix('*') {
                out.extend(
                    declared
                        .clone()
                        .into_iter()
                        .filter(|d| d.starts_with(prefix))
                        .map(Arc::from),
                );
            } else if declared.clone().into_iter().any(|d| d == pattern) {
                out.push(Arc::from(pattern.as_str()));
            }
            if out.len() == before {
                return Err(BuildError::UnknownMonitor {
                    class: self.id.clone(),
                    monitor: pattern.clone(),
                });
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn has_supervisor(&self) -> bool {
        self.chain
            .iter()
            .any(|a| a.action == RecoveryKind::RequestSupervisor)
    }
}

impl TreeDefinition {
    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.storm.window_s > 0.0) || self.storm.threshold == 0 {
            return Err(BuildError::Storm);
        }
        let mut seen = BTreeSet::new();
        for class in &self.classes {
            if !seen.insert(class.id.as_str()) {
                return Err(BuildError::DuplicateClass(class.id.clone()));
            }
            if class.chain.is_empty() {
                return Err(BuildError::EmptyChain(class.id.clone()));
            }
            let last = class.chain.len() - 1;
            for (i, action) in class.chain.iter().enumerate() {
                action.validate().map_err(|source| BuildError::Action {
                    class: class.id.clone(),
                    source,
                })?;
                if action.action == RecoveryKind::RequestSupervisor && i != last {
                    return Err(BuildError::SupervisorNotLast(class.id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn class(&self, id: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("tree definition serializes")
    }

    /// Arbiter tree for normal patrol operation.
    pub fn default_normal() -> Self {
        Self {
            storm: StormParams::default(),
            classes: vec![
                ClassDef::new(
                    "node_down",
                    ErrorCategory::Node,
                    &["liveness:*"],
                    vec![RecoveryAction::new(RecoveryKind::RestartNode)],
                ),
                ClassDef::new(
                    "clock_skew",
                    ErrorCategory::Clock,
                    &["clock_skew"],
                    vec![RecoveryAction::new(RecoveryKind::ResyncClock)],
                ),
                ClassDef::new(
                    "localization",
                    ErrorCategory::Localization,
                    &["localization"],
                    vec![
                        RecoveryAction::rotate_slow(0.3, 20.0),
                        RecoveryAction::new(RecoveryKind::RestartLocalization),
                        RecoveryAction::new(RecoveryKind::RequestSupervisor),
                    ],
                ),
                ClassDef::new(
                    "navigation",
                    ErrorCategory::Navigation,
                    &["navigation"],
                    vec![
                        RecoveryAction::wait(10.0),
                        RecoveryAction::move_back(0.5),
                        RecoveryAction::new(RecoveryKind::RequestSupervisor),
                    ],
                ),
                ClassDef::new(
                    "channel_rate",
                    ErrorCategory::Channel,
                    &["rate:*"],
                    vec![RecoveryAction::new(RecoveryKind::RestartNode)],
                ),
            ],
        }
    }

    /// Arbiter tree while docked and charging: no localization or navigation classes.
    pub fn default_charging() -> Self {
        let mut def = Self::default_normal();
        def.classes.retain(|c| {
            matches!(
                c.category,
                ErrorCategory::Node | ErrorCategory::Clock | ErrorCategory::Channel
            )
        });
        def
    }
}

/// Build the arbiter tree for a definition against the declared monitor set.
///
/// The root is a fallback over one sequence per class, in definition order, closed
/// by an always-succeeding leaf:
///
/// ```text
/// Fallback
/// ├── Sequence(class_1): [Condition(class_1 erroring), Escalation(chain_1)]
/// ├── ...
/// └── Nominal
/// ```
pub fn build_tree<'a>(
    def: &TreeDefinition,
    declared: impl IntoIterator<Item = &'a str> + Clone,
) -> Result<BtNode, BuildError> {
    def.validate()?;
    let mut children = Vec::with_capacity(def.classes.len() + 1);
    for class in &def.classes {
        let monitors = class.resolve_monitors(declared.clone())?;
        let class_id: Arc<str> = Arc::from(class.id.as_str());
        children.push(BtNode::Sequence(vec![
            BtNode::Condition(Predicate::AnyAtLeast {
                class: class_id.clone(),
                monitors,
                level: class.trigger,
            }),
            BtNode::Escalation {
                class: class_id.clone(),
                children: class
                    .chain
                    .iter()
                    .map(|a| BtNode::Action {
                        class: class_id.clone(),
                        action: a.clone(),
                    })
                    .collect(),
            },
        ]));
    }
    children.push(BtNode::Condition(Predicate::Always));
    Ok(BtNode::Fallback(children))
}
