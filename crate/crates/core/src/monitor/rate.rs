use std::collections::VecDeque;

use crate::time::{Nanos, NANOS_PER_SEC};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("need at least two arrivals to measure a rate, have {0}")]
    InsufficientData(usize),
    #[error("arrival {got} is not after previous arrival {last}")]
    NotIncreasing { last: Nanos, got: Nanos },
}

/// Ring of recent message arrival times for one channel.
#[derive(Debug, Clone)]
pub struct RateWindow {
    stamps: VecDeque<Nanos>,
    capacity: usize,
    nominal_hz: f64,
    horizon: Nanos,
}

impl RateWindow {
    /// `horizon` bounds how old an arrival may be and still count; `capacity` bounds memory.
    pub fn new(capacity: usize, nominal_hz: f64, horizon: Nanos) -> Self {
        assert!(capacity >= 2, "rate window needs capacity >= 2");
        Self {
            stamps: VecDeque::with_capacity(capacity),
            capacity,
            nominal_hz,
            horizon,
        }
    }

    pub fn nominal_hz(&self) -> f64 {
        self.nominal_hz
    }

    pub fn horizon(&self) -> Nanos {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn push(&mut self, t: Nanos) -> Result<(), RateError> {
        if let Some(&last) = self.stamps.back() {
            if t <= last {
                return Err(RateError::NotIncreasing { last, got: t });
            }
        }
        if self.stamps.len() == self.capacity {
            self.stamps.pop_front();
        }
        self.stamps.push_back(t);
        Ok(())
    }

    /// Drop arrivals older than the horizon relative to `now`.
    pub fn prune(&mut self, now: Nanos) {
        let Some(cutoff) = now.checked_sub(self.horizon) else {
            return;
        };
        while self.stamps.front().is_some_and(|&t| t <= cutoff) {
            self.stamps.pop_front();
        }
    }

    pub fn clear(&mut self) {
        self.stamps.clear();
    }

    /// `(count - 1) / span` over the arrivals currently held.
    pub fn measure(&self) -> Result<f64, RateError> {
        measure_rate(self.stamps.iter().copied())
    }
}

/// Rate in Hz of a strictly increasing arrival sequence.
pub fn measure_rate(stamps: impl IntoIterator<Item = Nanos>) -> Result<f64, RateError> {
    let mut it = stamps.into_iter();
    let Some(first) = it.next() else {
        return Err(RateError::InsufficientData(0));
    };
    let mut count = 1usize;
    let mut last = first;
    for t in it {
        count += 1;
        last = t;
    }
    if count < 2 {
        return Err(RateError::InsufficientData(count));
    }
    let span = (last - first) as f64 / NANOS_PER_SEC as f64;
    Ok((count - 1) as f64 / span)
}
