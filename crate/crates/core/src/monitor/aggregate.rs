use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{MonitorLevel, MonitorReport, MonitorSpec, Unit};
use crate::time::{to_secs, Nanos};

/// Monitors silent for longer than this many nominal periods are reported stale.
pub const STALENESS_PERIODS: u64 = 3;

/// One snapshot of the status bus: the latest report of every declared monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AggregatedStatus {
    pub seq: u64,
    pub timestamp: Nanos,
    pub entries: BTreeMap<Arc<str>, Arc<MonitorReport>>,
}

impl AggregatedStatus {
    pub fn get(&self, monitor_id: &str) -> Option<&MonitorReport> {
        self.entries.get(monitor_id).map(|r| r.as_ref())
    }

    pub fn level(&self, monitor_id: &str) -> Option<MonitorLevel> {
        self.get(monitor_id).map(|r| r.level)
    }

    /// Most severe level in the snapshot.
    pub fn worst(&self) -> MonitorLevel {
        self.entries
            .values()
            .map(|r| r.level)
            .max()
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("report from undeclared monitor `{0}` dropped (configuration drift)")]
    Undeclared(String),
}

#[derive(Debug, Clone)]
struct Declared {
    entity: Arc<str>,
    period: Nanos,
}

/// Single writer of [`AggregatedStatus`] snapshots.
#[derive(Debug, Default)]
pub struct Aggregator {
    declared: BTreeMap<Arc<str>, Declared>,
    latest: BTreeMap<Arc<str>, Arc<MonitorReport>>,
    seq: u64,
    dropped: u64,
}

impl Aggregator {
    pub fn new<'a>(specs: impl IntoIterator<Item = &'a MonitorSpec>) -> Self {
        let mut agg = Self::default();
        agg.declare(specs);
        agg
    }

    /// Replace the declared monitor set. Reports of monitors that stay declared are kept.
    pub fn declare<'a>(&mut self, specs: impl IntoIterator<Item = &'a MonitorSpec>) {
        self.declared = specs
            .into_iter()
            .map(|s| {
                (
                    Arc::<str>::from(s.id.as_str()),
                    Declared {
                        entity: Arc::from(s.entity.as_str()),
                        period: s.period(),
                    },
                )
            })
            .collect();
        let declared = &self.declared;
        self.latest.retain(|id, _| declared.contains_key(id));
    }

    pub fn declared_ids(&self) -> impl Iterator<Item = &str> {
        self.declared.keys().map(|k| k.as_ref())
    }

    pub fn is_declared(&self, monitor_id: &str) -> bool {
        self.declared.contains_key(monitor_id)
    }

    /// Number of reports dropped because their monitor was not declared.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn ingest(&mut self, report: MonitorReport) -> Result<(), AggregateError> {
        let Some((key, _)) = self.declared.get_key_value(report.monitor_id.as_ref()) else {
            self.dropped += 1;
            tracing::warn!(monitor = %report.monitor_id, "report from undeclared monitor dropped");
            return Err(AggregateError::Undeclared(report.monitor_id.to_string()));
        };
        let key = key.clone();
        match self.latest.get(&key) {
            // Keep the newest report; late arrivals never overwrite fresher state.
            Some(prev) if prev.timestamp > report.timestamp => {}
            _ => {
                self.latest.insert(key, Arc::new(report));
            }
        }
        Ok(())
    }

    /// Produce the next snapshot at `now`, marking silent monitors stale.
    pub fn snapshot(&mut self, now: Nanos) -> AggregatedStatus {
        self.seq += 1;
        let mut entries = BTreeMap::new();
        for (id, decl) in &self.declared {
            let cutoff = STALENESS_PERIODS * decl.period;
            let entry = match self.latest.get(id) {
                Some(r) if now.saturating_sub(r.timestamp) <= cutoff => r.clone(),
                Some(r) => Arc::new(r.staled(
                    now,
                    format!("silent for {:.1}s", to_secs(now - r.timestamp)),
                )),
                None => Arc::new(MonitorReport::with_level(
                    id.clone(),
                    decl.entity.clone(),
                    f64::NAN,
                    Unit::Count,
                    MonitorLevel::Stale,
                    now,
                    "never reported",
                )),
            };
            entries.insert(id.clone(), entry);
        }
        AggregatedStatus {
            seq: self.seq,
            timestamp: now,
            entries,
        }
    }
}

/// Fold a batch of reports into `aggregator` and take a snapshot.
pub fn aggregate(
    aggregator: &mut Aggregator,
    reports: impl IntoIterator<Item = MonitorReport>,
    now: Nanos,
) -> AggregatedStatus {
    for r in reports {
        let _ = aggregator.ingest(r);
    }
    aggregator.snapshot(now)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::{Band, MonitorKind};
    use crate::time::secs;

    fn specs() -> Vec<MonitorSpec> {
        let band = Band::high_is_bad(80.0, 95.0).unwrap();
        ["cpu", "ram", "net"]
            .iter()
            .map(|id| MonitorSpec::new(*id, "host", MonitorKind::Cpu { band }))
            .collect()
    }

    fn ok(id: &str, t: Nanos) -> MonitorReport {
        MonitorReport::with_level(id, "host", 10.0, Unit::Percent, MonitorLevel::Ok, t, "")
    }

    #[test]
    fn fresh_reports_are_all_ok() {
        let specs = specs();
        let mut agg = Aggregator::new(&specs);
        let snap = aggregate(
            &mut agg,
            specs.iter().map(|s| ok(&s.id, secs(1.0))),
            secs(1.0),
        );
        assert_eq!(snap.entries.len(), 3);
        assert!(snap.entries.values().all(|r| r.level == MonitorLevel::Ok));
        assert_eq!(snap.seq, 1);
    }

    #[test]
    fn silent_monitor_goes_stale() {
        let specs = specs();
        let mut agg = Aggregator::new(&specs);
        aggregate(&mut agg, specs.iter().map(|s| ok(&s.id, 0)), 0);
        // "net" stays silent for 5 periods (period 1 s), the others keep reporting.
        let mut snap = AggregatedStatus::default();
        for k in 1..=5 {
            snap = aggregate(
                &mut agg,
                [ok("cpu", secs(k as f64)), ok("ram", secs(k as f64))],
                secs(k as f64),
            );
        }
        assert_eq!(snap.level("net"), Some(MonitorLevel::Stale));
        assert_eq!(snap.level("cpu"), Some(MonitorLevel::Ok));
        assert_eq!(snap.level("ram"), Some(MonitorLevel::Ok));
        assert_eq!(snap.seq, 6);
    }

    #[test]
    fn exactly_three_periods_is_not_stale() {
        let specs = specs();
        let mut agg = Aggregator::new(&specs);
        agg.ingest(ok("cpu", 0)).unwrap();
        assert_eq!(agg.snapshot(secs(3.0)).level("cpu"), Some(MonitorLevel::Ok));
        assert_eq!(
            agg.snapshot(secs(3.5)).level("cpu"),
            Some(MonitorLevel::Stale)
        );
    }

    #[test]
    fn undeclared_report_is_dropped() {
        let specs = specs();
        let mut agg = Aggregator::new(&specs);
        let before = aggregate(&mut agg, specs.iter().map(|s| ok(&s.id, 0)), 0);
        assert!(agg.ingest(ok("ghost", 0)).is_err());
        let after = agg.snapshot(0);
        assert_eq!(before.entries, after.entries);
        assert_eq!(agg.dropped(), 1);
        assert!(after.get("ghost").is_none());
    }

    #[test]
    fn redeclare_keeps_shared_monitors() {
        let specs = specs();
        let mut agg = Aggregator::new(&specs);
        aggregate(&mut agg, specs.iter().map(|s| ok(&s.id, 0)), 0);
        agg.declare(&specs[..2]);
        let snap = agg.snapshot(0);
        assert_eq!(
            snap.entries.keys().map(|k| k.as_ref()).collect::<Vec<_>>(),
            ["cpu", "ram"]
        );
        assert_eq!(snap.level("cpu"), Some(MonitorLevel::Ok));
    }
}
