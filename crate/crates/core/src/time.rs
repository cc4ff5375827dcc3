//! Monotonic nanosecond timestamps and the injectable clock.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

/// Monotonic time in nanoseconds.
pub type Nanos = u64;

pub const NANOS_PER_SEC: u64 = 1_000_000_000;
pub const NANOS_PER_HOUR: u64 = 3_600 * NANOS_PER_SEC;
pub const NANOS_PER_DAY: u64 = 24 * NANOS_PER_HOUR;

pub fn secs(s: f64) -> Nanos {
    (s * NANOS_PER_SEC as f64).round() as Nanos
}

pub fn to_secs(n: Nanos) -> f64 {
    n as f64 / NANOS_PER_SEC as f64
}

pub fn to_hours(n: Nanos) -> f64 {
    n as f64 / NANOS_PER_HOUR as f64
}

/// Source of "now". Core logic never reads the wall clock directly.
pub trait Clock: Send + Sync {
    fn now(&self) -> Nanos;
}

/// Virtual clock advanced explicitly by the simulator or a test.
#[derive(Debug, Clone, Default)]
pub struct ManualClock(Arc<AtomicU64>);

impl ManualClock {
    pub fn new(start: Nanos) -> Self {
        Self(Arc::new(AtomicU64::new(start)))
    }

    pub fn set(&self, t: Nanos) {
        self.0.store(t, Ordering::SeqCst);
    }

    pub fn advance(&self, dt: Nanos) -> Nanos {
        self.0.fetch_add(dt, Ordering::SeqCst) + dt
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Nanos {
        self.0.load(Ordering::SeqCst)
    }
}

/// Wall-clock backed monotonic clock for the live daemon.
#[derive(Debug, Clone)]
pub struct MonotonicClock {
    origin: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Nanos {
        self.origin.elapsed().as_nanos() as Nanos
    }
}
