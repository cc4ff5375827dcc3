//! Append-only event stores.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::event::{Event, EventLog, LogError};
use crate::time::Nanos;

pub const DEFAULT_SYNC_EVERY: usize = 256;
pub const DEFAULT_PENDING_CAPACITY: usize = 65_536;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("producer {producer}: timestamp {t} precedes its last append {last}")]
    OutOfOrder {
        producer: String,
        t: Nanos,
        last: Nanos,
    },
    #[error("record {seq}: {source}")]
    Corrupt {
        seq: u64,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Append-only store. Sequence ids are dense and start at zero.
pub trait EventStore {
    /// Append for `producer`; timestamps must not go backwards per producer.
    fn append(&mut self, producer: &str, event: Event) -> Result<u64, StoreError>;
    fn read(&mut self, seq: u64) -> Result<Option<Event>, StoreError>;
    fn len(&self) -> u64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn flush(&mut self) -> Result<(), StoreError>;
    /// All events in append order.
    fn replay(
        &mut self,
    ) -> Result<Box<dyn Iterator<Item = Result<Event, StoreError>> + '_>, StoreError>;

    /// Closed log, stably ordered by timestamp.
    fn to_log(&mut self) -> Result<EventLog, StoreError> {
        let mut events = self.replay()?.collect::<Result<Vec<_>, _>>()?;
        events.sort_by_key(|e| e.t);
        Ok(EventLog::from_events(events).expect("sorted"))
    }
}

#[derive(Debug, Default)]
struct ProducerClock(BTreeMap<String, Nanos>);

impl ProducerClock {
    fn check(&mut self, producer: &str, t: Nanos) -> Result<(), StoreError> {
        if let Some(&last) = self.0.get(producer) {
            if t < last {
                return Err(StoreError::OutOfOrder {
                    producer: producer.to_string(),
                    t,
                    last,
                });
            }
        }
        self.0.insert(producer.to_string(), t);
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    events: Vec<Event>,
    producers: ProducerClock,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }
}

impl EventStore for MemoryStore {
    fn append(&mut self, producer: &str, event: Event) -> Result<u64, StoreError> {
        self.producers.check(producer, event.t)?;
        self.events.push(event);
        Ok(self.events.len() as u64 - 1)
    }

    fn read(&mut self, seq: u64) -> Result<Option<Event>, StoreError> {
        Ok(self.events.get(seq as usize).cloned())
    }

    fn len(&self) -> u64 {
        self.events.len() as u64
    }

    fn flush(&mut self) -> Result<(), StoreError> {
        Ok(())
    }

    fn replay(
        &mut self,
    ) -> Result<Box<dyn Iterator<Item = Result<Event, StoreError>> + '_>, StoreError> {
        Ok(Box::new(self.events.iter().cloned().map(Ok)))
    }
}

/// Newline-delimited JSON file. Appends are written through immediately and
/// fsynced every `sync_every` records. While the file cannot be written,
/// records wait in a bounded queue; what does not fit is dropped and counted.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    file: Option<File>,
    /// Byte offset of every durable record.
    offsets: Vec<u64>,
    end: u64,
    pending: VecDeque<Event>,
    pending_capacity: usize,
    overflow: u64,
    unsynced: usize,
    sync_every: usize,
    producers: ProducerClock,
}

impl FileStore {
    /// Open or create the store, indexing any existing records.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let mut store = Self::detached(path);
        store.connect()?;
        Ok(store)
    }

    /// A store that connects on first write; appends buffer until then.
    pub fn detached(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            file: None,
            offsets: Vec::new(),
            end: 0,
            pending: VecDeque::new(),
            pending_capacity: DEFAULT_PENDING_CAPACITY,
            overflow: 0,
            unsynced: 0,
            sync_every: DEFAULT_SYNC_EVERY,
            producers: ProducerClock::default(),
        }
    }

    pub fn with_sync_every(mut self, n: usize) -> Self {
        self.sync_every = n.max(1);
        self
    }

    pub fn with_pending_capacity(mut self, n: usize) -> Self {
        self.pending_capacity = n;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_connected(&self) -> bool {
        self.file.is_some()
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Records dropped because the pending queue was full.
    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    fn connect(&mut self) -> Result<(), StoreError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&self.path)?;
        let mut offsets = Vec::new();
        let mut pos = 0u64;
        let mut reader = BufReader::new(&mut file);
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            if !line.ends_with('\n') {
                // Torn final write from a crash: ignore the fragment.
                break;
            }
            if !line.trim().is_empty() {
                offsets.push(pos);
            }
            pos += n as u64;
        }
        drop(reader);
        let len = file.metadata()?.len();
        if pos < len {
            file.set_len(pos)?;
        }
        self.offsets = offsets;
        self.end = pos;
        self.file = Some(file);
        Ok(())
    }

    fn write_record(&mut self, event: &Event) -> std::io::Result<()> {
        let line = event.to_line();
        let file = self.file.as_mut().expect("connected");
        file.write_all(line.as_bytes())?;
        self.offsets.push(self.end);
        self.end += line.len() as u64;
        self.unsynced += 1;
        if self.unsynced >= self.sync_every {
            file.sync_data()?;
            self.unsynced = 0;
        }
        Ok(())
    }

    /// Try to write queued records. Returns how many remain queued.
    pub fn drain_pending(&mut self) -> usize {
        if self.file.is_none() && self.connect().is_err() {
            return self.pending.len();
        }
        while let Some(e) = self.pending.front().cloned() {
            if self.write_record(&e).is_err() {
                self.file = None;
                break;
            }
            self.pending.pop_front();
        }
        self.pending.len()
    }

    fn enqueue(&mut self, event: Event) {
        if self.pending.len() >= self.pending_capacity {
            self.overflow += 1;
            tracing::warn!(path = %self.path.display(), "event store unavailable and queue full, dropping record");
        } else {
            self.pending.push_back(event);
        }
    }
}

impl EventStore for FileStore {
    fn append(&mut self, producer: &str, event: Event) -> Result<u64, StoreError> {
        self.producers.check(producer, event.t)?;
        let seq = self.len();
        if self.drain_pending() > 0 || self.file.is_none() {
            self.enqueue(event);
            return Ok(seq);
        }
        if self.write_record(&event).is_err() {
            self.file = None;
            self.enqueue(event);
        }
        Ok(seq)
    }

    fn read(&mut self, seq: u64) -> Result<Option<Event>, StoreError> {
        let durable = self.offsets.len() as u64;
        if seq >= durable {
            return Ok(self.pending.get((seq - durable) as usize).cloned());
        }
        let start = self.offsets[seq as usize];
        let end = self
            .offsets
            .get(seq as usize + 1)
            .copied()
            .unwrap_or(self.end);
        let mut f = File::open(&self.path)?;
        f.seek(SeekFrom::Start(start))?;
        let mut buf = vec![0u8; (end - start) as usize];
        f.read_exact(&mut buf)?;
        let text = String::from_utf8_lossy(&buf);
        Event::from_line(&text)
            .map(Some)
            .map_err(|source| StoreError::Corrupt { seq, source })
    }

    fn len(&self) -> u64 {
        self.offsets.len() as u64 + self.pending.len() as u64
    }

    fn flush(&mut self) -> Result<(), StoreError> {
        self.drain_pending();
        if let Some(f) = self.file.as_mut() {
            f.sync_data()?;
            self.unsynced = 0;
        }
        Ok(())
    }

    fn replay(
        &mut self,
    ) -> Result<Box<dyn Iterator<Item = Result<Event, StoreError>> + '_>, StoreError> {
        let durable: Box<dyn Iterator<Item = Result<Event, StoreError>>> =
            if self.offsets.is_empty() {
                Box::new(std::iter::empty())
            } else {
                let reader = BufReader::new(File::open(&self.path)?.take(self.end));
                Box::new(
                    reader
                        .lines()
                        .filter(|l| !l.as_ref().is_ok_and(|l| l.trim().is_empty()))
                        .enumerate()
                        .map(|(i, l)| {
                            let l = l?;
                            Event::from_line(&l).map_err(|source| StoreError::Corrupt {
                                seq: i as u64,
                                source,
                            })
                        }),
                )
            };
        Ok(Box::new(
            durable.chain(self.pending.iter().cloned().map(Ok)),
        ))
    }
}

impl Drop for FileStore {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// Read a whole log file (no producer checks, strict time order).
pub fn read_log(path: impl AsRef<Path>) -> Result<EventLog, LogError> {
    EventLog::read_file(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EventKind;

    fn ev(t: Nanos) -> Event {
        Event::new(
            t,
            EventKind::DetectionCount {
                count: t,
                label: None,
            },
        )
    }

    #[test]
    fn append_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = FileStore::open(dir.path().join("log.jsonl")).unwrap();
        for t in 0..10 {
            assert_eq!(s.append("sim", ev(t)).unwrap(), t);
        }
        assert_eq!(s.read(7).unwrap(), Some(ev(7)));
        assert_eq!(s.read(10).unwrap(), None);
    }

    #[test]
    fn out_of_order_per_producer() {
        let mut s = MemoryStore::new();
        s.append("a", ev(5)).unwrap();
        s.append("b", ev(3)).unwrap();
        assert!(matches!(
            s.append("a", ev(4)),
            Err(StoreError::OutOfOrder { .. })
        ));
        assert_eq!(s.len(), 2);
        let log = s.to_log().unwrap();
        assert_eq!(log.events()[0].t, 3);
    }

    #[test]
    fn reopen_reindexes_and_drops_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        {
            let mut s = FileStore::open(&path).unwrap();
            s.append("sim", ev(1)).unwrap();
            s.append("sim", ev(2)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"t\":3,\"ki").unwrap();
        drop(f);
        let mut s = FileStore::open(&path).unwrap();
        assert_eq!(s.len(), 2);
        s.append("sim", ev(3)).unwrap();
        let all: Vec<_> = s.replay().unwrap().map(Result::unwrap).collect();
        assert_eq!(all, vec![ev(1), ev(2), ev(3)]);
    }

    #[test]
    fn unavailable_store_buffers_with_bounded_queue() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("log.jsonl");
        let mut s = FileStore::detached(&path).with_pending_capacity(3);
        for t in 0..5 {
            s.append("sim", ev(t)).unwrap();
        }
        assert!(!s.is_connected());
        assert_eq!(s.pending(), 3);
        assert_eq!(s.overflow(), 2);
        assert_eq!(s.read(1).unwrap(), Some(ev(1)));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        s.append("sim", ev(9)).unwrap();
        assert!(s.is_connected());
        assert_eq!(s.pending(), 0);
        s.flush().unwrap();
        let log = read_log(&path).unwrap();
        assert_eq!(log.len(), 4);
    }
}
