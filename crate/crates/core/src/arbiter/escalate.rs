use super::action::{RecoveryAction, RecoveryKind};
use super::definition::StormParams;
use super::history::{storm_active, DispatchHistory};
use crate::time::{secs, Nanos};

/// Outcome of consulting a recovery chain.
#[derive(Debug, Clone, PartialEq)]
pub enum EscalationStep {
    Dispatch(RecoveryAction),
    /// Something is still in flight: cooldowns running or a supervisor request pending.
    Wait,
    /// Every budget is spent and the chain has no supervisor to fall back on.
    Exhausted,
}

/// Pick the next recovery for `class`.
///
/// Cheap actions are tried in chain order subject to their per-episode budget and
/// cooldown. The supervisor request is reached only once every cheaper action is
/// exhausted, or immediately when a restart storm is detected for a chain that
/// restarts nodes.
pub fn escalation_step(
    class: &str,
    chain: &[RecoveryAction],
    history: &DispatchHistory,
    now: Nanos,
    storm: StormParams,
) -> EscalationStep {
    if history.supervisor_pending(class) {
        return EscalationStep::Wait;
    }
    let supervisor = chain
        .iter()
        .find(|a| a.action == RecoveryKind::RequestSupervisor)
        .cloned()
        .unwrap_or_else(|| RecoveryAction::new(RecoveryKind::RequestSupervisor));

    let restarts_nodes = chain.iter().any(|a| a.action == RecoveryKind::RestartNode);
    if restarts_nodes && storm_active(history, now, secs(storm.window_s), storm.threshold) {
        return EscalationStep::Dispatch(supervisor);
    }

    let episode = history.episode(class);
    let mut cooling = false;
    for action in chain
        .iter()
        .filter(|a| a.action != RecoveryKind::RequestSupervisor)
    {
        if history.attempts(class, action.action, episode) >= action.budget {
            continue;
        }
        let ready = history
            .last_dispatch(class, action.action)
            .is_none_or(|last| now.saturating_sub(last) >= secs(action.cooldown_s));
        if ready {
            return EscalationStep::Dispatch(action.clone());
        }
        cooling = true;
    }
    if cooling {
        EscalationStep::Wait
    } else if chain
        .iter()
        .any(|a| a.action == RecoveryKind::RequestSupervisor)
    {
        EscalationStep::Dispatch(supervisor)
    } else {
        EscalationStep::Exhausted
    }
}

/// Next action to dispatch, if any.
pub fn escalate(
    class: &str,
    chain: &[RecoveryAction],
    history: &DispatchHistory,
    now: Nanos,
    storm: StormParams,
) -> Option<RecoveryAction> {
    match escalation_step(class, chain, history, now, storm) {
        EscalationStep::Dispatch(a) => Some(a),
        EscalationStep::Wait | EscalationStep::Exhausted => None,
    }
}
