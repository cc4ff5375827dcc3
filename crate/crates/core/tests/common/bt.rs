//! Behavior-tree properties, shared by the proptest suite and the acceptance run.

use std::collections::BTreeMap;
use std::sync::Arc;

use lta_core::arbiter::{
    Arbiter, ClassDef, Dispatch, ErrorCategory, RecordingSink, RecoveryAction, RecoveryKind,
    RunningAction, StormParams, TickStatus, TreeDefinition,
};
use lta_core::monitor::{AggregatedStatus, MonitorLevel, MonitorReport, Unit};
use lta_core::time::{secs, Nanos};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Steps = Vec<(u64, u8, u8)>;

pub fn status(levels: &[(String, MonitorLevel)]) -> AggregatedStatus {
    let mut s = AggregatedStatus::default();
    for (id, level) in levels {
        s.entries.insert(
            Arc::from(id.as_str()),
            Arc::new(MonitorReport::with_level(
                id.as_str(),
                "robot",
                0.0,
                Unit::Count,
                *level,
                0,
                "",
            )),
        );
    }
    s
}

pub fn level(on: bool) -> MonitorLevel {
    if on {
        MonitorLevel::Error
    } else {
        MonitorLevel::Ok
    }
}

pub fn class(i: usize) -> ClassDef {
    ClassDef::new(
        format!("c{i}"),
        ErrorCategory::Other,
        &[&format!("m{i}")],
        vec![
            RecoveryAction::wait(5.0),
            RecoveryAction::new(RecoveryKind::RequestSupervisor),
        ],
    )
}

pub fn definition(ids: &[usize]) -> TreeDefinition {
    TreeDefinition {
        storm: StormParams::default(),
        classes: ids.iter().map(|&i| class(i)).collect(),
    }
}

pub fn monitors(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

pub fn running(d: &Dispatch) -> RunningAction {
    RunningAction {
        class: d.class.clone(),
        action: d.action.action,
        since: d.t,
        target: None,
    }
}

pub fn priority_strategy() -> impl Strategy<Value = (Vec<usize>, usize, Vec<bool>)> {
    (
        Just((0..8).collect::<Vec<usize>>()).prop_shuffle(),
        0usize..8,
        prop::collection::vec(any::<bool>(), 8),
    )
}

/// The leftmost erroring class of the definition gets the dispatch, and
/// concatenating two definitions puts the first one's classes ahead.
pub fn priority_case(
    order: Vec<usize>,
    split: usize,
    errors: Vec<bool>,
) -> Result<(), TestCaseError> {
    let mons = monitors(8);
    let (left, right) = order.split_at(split);
    let mut composed = definition(left);
    composed.classes.extend(definition(right).classes);
    let mut arb = Arbiter::new(composed, mons.iter().map(String::as_str)).unwrap();
    let s = status(
        &mons
            .iter()
            .cloned()
            .zip(errors.iter().map(|&e| level(e)))
            .collect::<Vec<_>>(),
    );
    let mut sink = RecordingSink::default();
    let out = arb.tick(&s, None, secs(1.0), &mut sink);
    let expected = left
        .iter()
        .chain(right)
        .find(|&&i| errors[i])
        .map(|i| format!("c{i}"));
    let got = out.dispatched.map(|d| d.class.to_string());
    prop_assert_eq!(got, expected.clone());
    prop_assert_eq!(
        out.status,
        Some(if expected.is_some() {
            TickStatus::Running
        } else {
            TickStatus::Success
        })
    );
    Ok(())
}

pub fn preempt_strategy() -> impl Strategy<Value = (Vec<bool>, usize, bool)> {
    (
        prop::collection::vec(any::<bool>(), 5),
        0usize..5,
        any::<bool>(),
    )
}

/// A running recovery whose error clears is cancelled on the very next tick,
/// and a higher-priority error takes over from a lower one the same way.
pub fn preempt_case(errors: Vec<bool>, pick: usize, higher: bool) -> Result<(), TestCaseError> {
    let mons = monitors(5);
    let ids: Vec<usize> = (0..5).collect();
    let mut arb = Arbiter::new(definition(&ids), mons.iter().map(String::as_str)).unwrap();
    // Only `pick` errors at first.
    let first: Vec<_> = mons
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), level(i == pick)))
        .collect();
    let mut sink = RecordingSink::default();
    let d = arb
        .tick(&status(&first), None, secs(1.0), &mut sink)
        .dispatched
        .unwrap();
    prop_assert_eq!(d.class.as_ref(), format!("c{pick}"));
    let run = running(&d);

    let mut next: Vec<_> = mons
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), level(errors[i] && i != pick)))
        .collect();
    if higher && pick > 0 {
        next[0].1 = MonitorLevel::Error;
        next[pick].1 = MonitorLevel::Error;
    }
    let out = arb.tick(&status(&next), Some(&run), secs(2.0), &mut sink);
    let still = next[pick].1 == MonitorLevel::Error;
    let outranked = next[..pick].iter().any(|(_, l)| *l == MonitorLevel::Error);
    if still && !outranked {
        prop_assert!(out.cancelled.is_none());
        prop_assert_eq!(out.status, Some(TickStatus::Running));
    } else {
        prop_assert_eq!(out.cancelled.as_ref(), Some(&run));
        prop_assert_eq!(sink.cancelled.len(), 1);
    }
    Ok(())
}

pub fn last_resort_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<f64>, Steps)> {
    (
        prop::collection::vec(1u32..4, 1..4),
        prop::collection::vec(0.0..40.0f64, 4),
        prop::collection::vec((1u64..40, 0u8..10, 0u8..10), 50..300),
    )
}

/// The supervisor is asked only once every cheaper action has spent its
/// budget in the current episode, or during a restart storm (10 in 180 s).
pub fn last_resort_case(
    budgets: Vec<u32>,
    cooldowns: Vec<f64>,
    steps: Steps,
) -> Result<(), TestCaseError> {
    let kinds = [
        RecoveryKind::RestartNode,
        RecoveryKind::Wait,
        RecoveryKind::MoveBack,
    ];
    let mut chain: Vec<RecoveryAction> = budgets
        .iter()
        .zip(kinds)
        .zip(&cooldowns)
        .map(|((&b, k), &c)| {
            let a = match k {
                RecoveryKind::Wait => RecoveryAction::wait(1.0),
                RecoveryKind::MoveBack => RecoveryAction::move_back(0.3),
                k => RecoveryAction::new(k),
            };
            a.with_budget(b).with_cooldown(c)
        })
        .collect();
    chain.push(RecoveryAction::new(RecoveryKind::RequestSupervisor));
    let def = TreeDefinition {
        storm: StormParams {
            window_s: 180.0,
            threshold: 10,
        },
        classes: vec![ClassDef::new(
            "node",
            ErrorCategory::Node,
            &["m0"],
            chain.clone(),
        )],
    };
    let mut arb = Arbiter::new(def, ["m0"]).unwrap();
    let mut sink = RecordingSink::default();

    // Independent bookkeeping of episodes, attempts and restarts.
    let mut t: Nanos = 0;
    let mut in_error = false;
    let mut episode = 0u64;
    let mut attempts: BTreeMap<(u64, RecoveryKind), u32> = BTreeMap::new();
    let mut restarts: Vec<Nanos> = Vec::new();
    let mut pending = false;
    for (dt, flip, resolve) in steps {
        t += secs(dt as f64);
        if flip < 2 {
            in_error = !in_error;
            if in_error {
                episode += 1;
            }
        }
        if pending && resolve < 3 {
            arb.supervisor_resolved("node");
            pending = false;
        }
        let out = arb.tick(
            &status(&[("m0".into(), level(in_error))]),
            None,
            t,
            &mut sink,
        );
        let Some(d) = out.dispatched else { continue };
        prop_assert!(in_error);
        prop_assert!(!pending, "dispatch while a supervisor request is open");
        let kind = d.action.action;
        if kind == RecoveryKind::RequestSupervisor {
            let exhausted = chain[..chain.len() - 1]
                .iter()
                .all(|a| attempts.get(&(episode, a.action)).copied().unwrap_or(0) >= a.budget);
            let storm = restarts
                .iter()
                .filter(|&&r| r + secs(180.0) >= t && r <= t)
                .count()
                >= 10;
            prop_assert!(exhausted || storm, "early supervisor request at {}", t);
            pending = true;
        } else {
            *attempts.entry((episode, kind)).or_default() += 1;
            if kind == RecoveryKind::RestartNode {
                restarts.push(t);
            }
        }
    }
    Ok(())
}
