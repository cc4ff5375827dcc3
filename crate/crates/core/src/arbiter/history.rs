use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::{RecoveryAction, RecoveryKind};
use crate::time::Nanos;

/// A recovery dispatched by the arbiter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub t: Nanos,
    pub class: Arc<str>,
    pub episode: u64,
    pub action: RecoveryAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Episode {
    id: u64,
    active: bool,
}

const RECENT_CAPACITY: usize = 256;

/// Explicit escalation memory handed to every tick: per-episode attempt counts,
/// last dispatch times, recent restarts and pending supervisor requests.
#[derive(Debug, Clone, Default)]
pub struct DispatchHistory {
    recent: VecDeque<Dispatch>,
    attempts: BTreeMap<(Arc<str>, RecoveryKind), (u64, u32)>,
    last: BTreeMap<(Arc<str>, RecoveryKind), Nanos>,
    restarts: VecDeque<Nanos>,
    episodes: BTreeMap<Arc<str>, Episode>,
    pending_supervisor: BTreeSet<Arc<str>>,
}

impl DispatchHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Track error episodes: a class entering error starts a fresh episode.
    pub fn observe(&mut self, class: &Arc<str>, in_error: bool) {
        let ep = self.episodes.entry(class.clone()).or_default();
        if in_error && !ep.active {
            ep.id += 1;
        }
        ep.active = in_error;
    }

    pub fn episode(&self, class: &str) -> u64 {
        self.episodes.get(class).map_or(0, |e| e.id)
    }

    pub fn record(&mut self, d: Dispatch) {
        let key = (d.class.clone(), d.action.action);
        let entry = self.attempts.entry(key.clone()).or_insert((d.episode, 0));
        if entry.0 != d.episode {
            *entry = (d.episode, 0);
        }
        entry.1 += 1;
        self.last.insert(key, d.t);
        if d.action.action == RecoveryKind::RestartNode {
            self.restarts.push_back(d.t);
            if self.restarts.len() > 4 * RECENT_CAPACITY {
                self.restarts.pop_front();
            }
        }
        if d.action.action == RecoveryKind::RequestSupervisor {
            self.pending_supervisor.insert(d.class.clone());
        }
        if self.recent.len() == RECENT_CAPACITY {
            self.recent.pop_front();
        }
        self.recent.push_back(d);
    }

    /// Attempts of `kind` for `class` within `episode`.
    pub fn attempts(&self, class: &str, kind: RecoveryKind, episode: u64) -> u32 {
        self.attempts
            .get(&(Arc::from(class), kind))
            .filter(|(ep, _)| *ep == episode)
            .map_or(0, |(_, n)| *n)
    }

    pub fn last_dispatch(&self, class: &str, kind: RecoveryKind) -> Option<Nanos> {
        self.last.get(&(Arc::from(class), kind)).copied()
    }

    pub fn restart_times(&self) -> impl Iterator<Item = Nanos> + '_ {
        self.restarts.iter().copied()
    }

    pub fn supervisor_pending(&self, class: &str) -> bool {
        self.pending_supervisor.contains(class)
    }

    pub fn resolve_supervisor(&mut self, class: &str) {
        self.pending_supervisor.remove(class);
    }

    pub fn recent(&self) -> impl Iterator<Item = &Dispatch> {
        self.recent.iter()
    }
}

/// True iff at least `threshold` restarts fall inside some window of length `window`.
///
/// `times` must be sorted ascending.
pub fn detect_restart_storm(times: &[Nanos], window: Nanos, threshold: usize) -> bool {
    assert!(window > 0, "storm window must be positive");
    if threshold == 0 {
        return true;
    }
    times
        .windows(threshold)
        .any(|w| w[threshold - 1] - w[0] <= window)
}

/// Storm check over the restarts of the last `window` before `now`.
pub fn storm_active(
    history: &DispatchHistory,
    now: Nanos,
    window: Nanos,
    threshold: usize,
) -> bool {
    let cutoff = now.saturating_sub(window);
    let recent: Vec<Nanos> = history
        .restart_times()
        .filter(|&t| t >= cutoff && t <= now)
        .collect();
    detect_restart_storm(&recent, window, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::secs;

    #[test]
    fn storm_examples() {
        let window = secs(180.0);
        // 10 restarts in 170 s
        let burst: Vec<_> = (0..10).map(|i| secs(170.0 * i as f64 / 9.0)).collect();
        assert!(detect_restart_storm(&burst, window, 10));
        // 9 restarts in 180 s
        let nine: Vec<_> = (0..9).map(|i| secs(180.0 * i as f64 / 8.0)).collect();
        assert!(!detect_restart_storm(&nine, window, 10));
        // 10 restarts spread over 600 s: every 10 consecutive span 600 s
        let spread: Vec<_> = (0..10).map(|i| secs(600.0 * i as f64 / 9.0)).collect();
        assert!(!detect_restart_storm(&spread, window, 10));
    }

    #[test]
    fn storm_sliding_window_finds_inner_burst() {
        let mut times: Vec<_> = (0..5).map(|i| secs(1000.0 * i as f64)).collect();
        times.extend((0..10).map(|i| secs(5000.0 + 15.0 * i as f64)));
        times.push(secs(9000.0));
        assert!(detect_restart_storm(&times, secs(180.0), 10));
    }

    #[test]
    fn attempts_reset_per_episode() {
        let class: Arc<str> = Arc::from("nav");
        let mut h = DispatchHistory::new();
        h.observe(&class, true);
        let ep = h.episode("nav");
        for t in [0, 20] {
            h.record(Dispatch {
                t: secs(t as f64),
                class: class.clone(),
                episode: ep,
                action: RecoveryAction::wait(5.0),
                target: None,
            });
        }
        assert_eq!(h.attempts("nav", RecoveryKind::Wait, ep), 2);
        h.observe(&class, false);
        h.observe(&class, true);
        assert_eq!(h.episode("nav"), ep + 1);
        assert_eq!(h.attempts("nav", RecoveryKind::Wait, ep + 1), 0);
        assert_eq!(h.last_dispatch("nav", RecoveryKind::Wait), Some(secs(20.0)));
    }
}
