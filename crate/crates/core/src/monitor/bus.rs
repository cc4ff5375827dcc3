use std::sync::mpsc::{self, Receiver, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};

use super::AggregatedStatus;

/// In-process fan-out of status snapshots.
///
/// Publishing never blocks: a subscriber whose queue is full misses snapshots and
/// can catch up through [`StatusBus::latest`].
#[derive(Debug, Default, Clone)]
pub struct StatusBus {
    inner: Arc<Mutex<BusInner>>,
}

#[derive(Debug, Default)]
struct BusInner {
    latest: Option<Arc<AggregatedStatus>>,
    subscribers: Vec<SyncSender<Arc<AggregatedStatus>>>,
    lagged: u64,
}

impl StatusBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&self, queue: usize) -> Receiver<Arc<AggregatedStatus>> {
        let (tx, rx) = mpsc::sync_channel(queue.max(1));
        let mut inner = self.inner.lock().unwrap();
        if let Some(latest) = &inner.latest {
            let _ = tx.try_send(latest.clone());
        }
        inner.subscribers.push(tx);
        rx
    }

    pub fn publish(&self, snapshot: AggregatedStatus) -> Arc<AggregatedStatus> {
        let snapshot = Arc::new(snapshot);
        let mut inner = self.inner.lock().unwrap();
        inner.latest = Some(snapshot.clone());
        let mut lagged = 0;
        inner
            .subscribers
            .retain(|tx| match tx.try_send(snapshot.clone()) {
                Ok(()) => true,
                Err(TrySendError::Full(_)) => {
                    lagged += 1;
                    true
                }
                Err(TrySendError::Disconnected(_)) => false,
            });
        inner.lagged += lagged;
        snapshot
    }

    pub fn latest(&self) -> Option<Arc<AggregatedStatus>> {
        self.inner.lock().unwrap().latest.clone()
    }

    /// Snapshots not delivered because a subscriber queue was full.
    pub fn lagged(&self) -> u64 {
        self.inner.lock().unwrap().lagged
    }
}
