//! Orchestrator scenarios shared by the orchestrator tests and the acceptance run.

use std::collections::{BTreeMap, BTreeSet};

use lta_core::orchestrator::{
    Configuration, ConfigurationSet, EntitySpec, FakeBehavior, FakeRunner, Orchestrator,
    ProcessDescriptor, ProcessState,
};
use lta_core::time::{secs, Nanos};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POOL: [&str; 7] = [
    "base",
    "laser",
    "localization",
    "navigation",
    "camera",
    "slam",
    "docking",
];

fn entity(id: &str) -> EntitySpec {
    EntitySpec::new(id, ProcessDescriptor::new(format!("/usr/bin/{id}")))
}

fn random_set(rng: &mut ChaCha8Rng) -> ConfigurationSet {
    let n = rng.random_range(2..=5);
    let configurations = (0..n)
        .map(|i| {
            let ids: Vec<&str> = POOL
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.5))
                .collect();
            Configuration::new(format!("cfg{i}"), ids.into_iter().map(entity).collect())
        })
        .collect();
    ConfigurationSet {
        initial: "cfg0".into(),
        configurations,
    }
}

fn settle(o: &mut Orchestrator<FakeRunner>, now: &mut Nanos) -> Result<(), String> {
    for _ in 0..10_000 {
        o.step(*now);
        if o.is_idle() {
            return Ok(());
        }
        *now += secs(0.1);
    }
    Err("orchestrator never settled".into())
}

fn check_exact(o: &Orchestrator<FakeRunner>, what: &str) -> Result<(), String> {
    let declared: BTreeSet<String> = o.active().entities.iter().map(|e| e.id.clone()).collect();
    let running: BTreeSet<String> = o.running_set().into_iter().map(String::from).collect();
    let alive: BTreeSet<String> = o.runner().alive().map(String::from).collect();
    if running != declared || alive != declared {
        return Err(format!(
            "{what}: declared {declared:?}, running {running:?}, alive {alive:?}"
        ));
    }
    Ok(())
}

/// Random configuration sets and switch sequences; after each settles the
/// running set must equal the declared set of the active configuration.
pub fn random_switch_sequences(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let set = random_set(&mut rng);
        let names: Vec<String> = set.configurations.iter().map(|c| c.name.clone()).collect();
        let mut o = Orchestrator::new(set, FakeRunner::new()).map_err(|e| e.to_string())?;
        let mut now = 0;
        settle(&mut o, &mut now)?;
        for _ in 0..rng.random_range(1..=20) {
            let to = names.choose(&mut rng).unwrap().clone();
            o.switch_configuration(&to).map_err(|e| e.to_string())?;
            // Sometimes let switches pile up before stepping.
            if rng.random_bool(0.6) {
                settle(&mut o, &mut now)?;
                check_exact(&o, &format!("case {case} after switching to {to}"))?;
            }
        }
        settle(&mut o, &mut now)?;
        check_exact(&o, &format!("case {case}"))?;
    }
    Ok(())
}

/// One entity crashes on every start and is restarted whenever it fails.
/// Returns the worst heartbeat gap of the healthy entities and the restart count.
pub fn crash_loop(period: Nanos, periods: u64) -> Result<(Nanos, u32), String> {
    let set = ConfigurationSet {
        initial: "normal".into(),
        configurations: vec![Configuration::new(
            "normal",
            vec![
                entity("base"),
                entity("laser"),
                entity("flaky"),
                entity("navigation"),
            ],
        )],
    };
    let mut runner = FakeRunner::new();
    runner.set_behavior(
        "flaky",
        FakeBehavior {
            always_crash: true,
            ..FakeBehavior::default()
        },
    );
    let mut o = Orchestrator::new(set, runner).map_err(|e| e.to_string())?;
    let mut last: BTreeMap<String, Nanos> = BTreeMap::new();
    let mut worst_gap = 0;
    let mut restarts = 0;
    for k in 0..periods {
        let now = k * period;
        if o.state("flaky") == Some(ProcessState::Failed) && o.is_idle() {
            o.restart_entity("flaky").map_err(|e| e.to_string())?;
            restarts += 1;
        }
        o.step(now);
        for hb in o.supervise(now) {
            if hb.entity == "flaky" {
                continue;
            }
            if let Some(prev) = last.insert(hb.entity.to_string(), hb.t) {
                worst_gap = worst_gap.max(hb.t - prev);
            }
        }
    }
    for id in ["base", "laser", "navigation"] {
        if !last.contains_key(id) {
            return Err(format!("{id} never beat"));
        }
    }
    Ok((worst_gap, restarts))
}
