mod common;

use common::bt::{
    last_resort_case, last_resort_strategy, preempt_case, preempt_strategy, priority_case,
    priority_strategy, status,
};
use lta_core::arbiter::{
    Arbiter, ClassDef, ErrorCategory, RecordingSink, RecoveryAction, RecoveryKind, StormParams,
    TreeDefinition,
};
use lta_core::monitor::MonitorLevel;
use lta_core::time::secs;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn priority_follows_composition((order, split, errors) in priority_strategy()) {
        priority_case(order, split, errors)?;
    }

    #[test]
    fn clearing_preempts_running_recovery((errors, pick, higher) in preempt_strategy()) {
        preempt_case(errors, pick, higher)?;
    }

    #[test]
    fn supervisor_is_the_last_resort((budgets, cooldowns, steps) in last_resort_strategy()) {
        last_resort_case(budgets, cooldowns, steps)?;
    }
}

#[test]
fn storm_forces_an_early_request() {
    let chain = vec![
        RecoveryAction::new(RecoveryKind::RestartNode)
            .with_budget(1)
            .with_cooldown(0.0),
        RecoveryAction::wait(1.0).with_budget(5),
        RecoveryAction::new(RecoveryKind::RequestSupervisor),
    ];
    let def = TreeDefinition {
        storm: StormParams::default(),
        classes: vec![ClassDef::new("node", ErrorCategory::Node, &["m0"], chain)],
    };
    let mut arb = Arbiter::new(def, ["m0"]).unwrap();
    let mut sink = RecordingSink::default();
    let mut t = 0;
    let mut last = None;
    // Ten crash-restart cycles, 15 s apart: each is a fresh episode.
    for _ in 0..11 {
        t += secs(15.0);
        arb.tick(
            &status(&[("m0".into(), MonitorLevel::Ok)]),
            None,
            t,
            &mut sink,
        );
        t += secs(1.0);
        last = arb
            .tick(
                &status(&[("m0".into(), MonitorLevel::Error)]),
                None,
                t,
                &mut sink,
            )
            .dispatched;
    }
    assert_eq!(last.unwrap().action.action, RecoveryKind::RequestSupervisor);
    let restarts = sink
        .dispatched
        .iter()
        .filter(|d| d.action.action == RecoveryKind::RestartNode)
        .count();
    assert_eq!(restarts, 10);
}

#[test]
fn exhausted_chain_asks_once_and_waits() {
    let chain = vec![
        RecoveryAction::wait(1.0).with_budget(2).with_cooldown(0.0),
        RecoveryAction::new(RecoveryKind::RequestSupervisor),
    ];
    let def = TreeDefinition {
        storm: StormParams::default(),
        classes: vec![ClassDef::new(
            "nav",
            ErrorCategory::Navigation,
            &["m0"],
            chain,
        )],
    };
    let mut arb = Arbiter::new(def, ["m0"]).unwrap();
    let mut sink = RecordingSink::default();
    let error = status(&[("m0".into(), MonitorLevel::Error)]);
    for k in 0..6 {
        arb.tick(&error, None, secs(k as f64 * 10.0), &mut sink);
    }
    let kinds: Vec<_> = sink.dispatched.iter().map(|d| d.action.action).collect();
    assert_eq!(
        kinds,
        [
            RecoveryKind::Wait,
            RecoveryKind::Wait,
            RecoveryKind::RequestSupervisor
        ]
    );
    arb.supervisor_resolved("nav");
    let again = arb
        .tick(&error, None, secs(100.0), &mut sink)
        .dispatched
        .unwrap();
    assert_eq!(again.action.action, RecoveryKind::RequestSupervisor);
}
