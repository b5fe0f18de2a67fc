//! In-process partitioned log: topics, keyed producers, consumer groups
//! with exclusive partition assignment, plus the consent store and the
//! compliance checker that run on top of it.
//!
//! Offsets are dense per partition and start at 0. A committed offset `o`
//! means records `0..=o` are done; consumers resume at `o + 1`.

mod checker;
mod clock;
mod consent;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

pub use checker::{run_checker, simulate, Checker, CheckerStats};
pub use clock::{Clock, MonotonicClock, VirtualClock};
pub use consent::{ConsentState, ConsentStore};

/// Bytes charged per record on top of key and value.
pub const RECORD_HEADER_BYTES: u64 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BrokerError {
    #[error("topic `{0}` already exists")]
    DuplicateTopic(String),
    #[error("a topic needs at least one partition, got {0}")]
    BadPartitionCount(usize),
    #[error("replication factor must be at least 1")]
    BadReplicationFactor,
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("`{0}` is not a member of the group")]
    UnknownMember(String),
    #[error("`{0}` is already a member of the group")]
    DuplicateMember(String),
    #[error("partition {partition} is not assigned to `{consumer}`")]
    NotAssigned { consumer: String, partition: usize },
    #[error("commit of offset {offset} on partition {partition} would rewind from {committed}")]
    RewindRejected { partition: usize, committed: u64, offset: u64 },
    #[error("offset {offset} on partition {partition} has not been produced")]
    OffsetOutOfRange { partition: usize, offset: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub key: Arc<[u8]>,
    pub value: Arc<[u8]>,
    pub partition: usize,
    pub offset: u64,
    pub enqueue_ns: u64,
}

impl Record {
    pub fn key_str(&self) -> &str {
        std::str::from_utf8(&self.key).unwrap_or("")
    }
}

/// 64-bit FNV-1a.
pub fn stable_hash(key: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in key {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn partition_for(key: &[u8], partitions: usize) -> usize {
    (stable_hash(key) % partitions as u64) as usize
}

#[derive(Debug)]
pub struct Topic {
    name: String,
    partitions: Vec<RwLock<Vec<Record>>>,
    replication_factor: u32,
    /// Total records produced; guarded for the condition variable.
    produced: Mutex<(u64, bool)>,
    arrived: Condvar,
}

impl Topic {
    pub fn new(name: &str, n: usize, replication_factor: u32) -> Self {
        Topic {
            name: name.to_string(),
            partitions: (0..n).map(|_| RwLock::new(Vec::new())).collect(),
            replication_factor,
            produced: Mutex::new((0, false)),
            arrived: Condvar::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn replication_factor(&self) -> u32 {
        self.replication_factor
    }

    /// Appends with an explicit enqueue time. Returns `(partition, offset)`.
    pub fn produce_at(&self, key: &[u8], value: &[u8], enqueue_ns: u64) -> (usize, u64) {
        let partition = partition_for(key, self.partitions.len());
        let offset = {
            let mut log = self.partitions[partition].write().expect("partition lock");
            let offset = log.len() as u64;
            log.push(Record { key: key.into(), value: value.into(), partition, offset, enqueue_ns });
            offset
        };
        let mut g = self.produced.lock().expect("topic lock");
        g.0 += 1;
        self.arrived.notify_all();
        (partition, offset)
    }

    /// Marks the end of the stream and wakes blocked consumers.
    pub fn close(&self) {
        self.produced.lock().expect("topic lock").1 = true;
        self.arrived.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.produced.lock().expect("topic lock").1
    }

    pub fn len(&self) -> u64 {
        self.produced.lock().expect("topic lock").0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn partition_len(&self, p: usize) -> u64 {
        self.partitions[p].read().expect("partition lock").len() as u64
    }

    /// Records `from..` of partition `p`, at most `max`.
    pub fn read(&self, p: usize, from: u64, max: usize) -> Vec<Record> {
        let log = self.partitions[p].read().expect("partition lock");
        log.iter().skip(from as usize).take(max).cloned().collect()
    }

    /// Every record, partition by partition.
    pub fn records(&self) -> Vec<Record> {
        (0..self.partitions.len()).flat_map(|p| self.read(p, 0, usize::MAX)).collect()
    }

    /// Blocks until more than `seen` records exist, the topic closes, or
    /// `timeout` passes. Returns the current total.
    pub fn wait_beyond(&self, seen: u64, timeout: Duration) -> u64 {
        let g = self.produced.lock().expect("topic lock");
        let (g, _) = self
            .arrived
            .wait_timeout_while(g, timeout, |(n, closed)| *n <= seen && !*closed)
            .expect("topic lock");
        g.0
    }

    /// Σ (value + key + header) × replication factor.
    pub fn storage_bytes(&self) -> u64 {
        let raw: u64 = self
            .partitions
            .iter()
            .map(|p| {
                p.read()
                    .expect("partition lock")
                    .iter()
                    .map(|r| r.value.len() as u64 + r.key.len() as u64 + RECORD_HEADER_BYTES)
                    .sum::<u64>()
            })
            .sum();
        raw * self.replication_factor as u64
    }
}

#[derive(Debug, Default)]
struct GroupState {
    members: BTreeSet<String>,
    assignment: Vec<Option<String>>,
    committed: Vec<Option<u64>>,
    /// Next offset to fetch, per member and partition.
    positions: HashMap<String, HashMap<usize, u64>>,
    cursor: HashMap<String, usize>,
    generation: u64,
}

impl GroupState {
    fn rebalance(&mut self) {
        let members: Vec<&String> = self.members.iter().collect();
        for (p, slot) in self.assignment.iter_mut().enumerate() {
            *slot = (!members.is_empty()).then(|| members[p % members.len()].clone());
        }
        self.positions.clear();
        for (p, owner) in self.assignment.iter().enumerate() {
            if let Some(m) = owner {
                let next = self.committed[p].map_or(0, |o| o + 1);
                self.positions.entry(m.clone()).or_default().insert(p, next);
            }
        }
        for m in &self.members {
            self.positions.entry(m.clone()).or_default();
        }
        self.generation += 1;
    }
}

/// Consumers sharing one topic. Each partition has at most one owner, and
/// owners' partition counts differ by at most one.
#[derive(Debug)]
pub struct ConsumerGroup {
    group_id: String,
    topic: Arc<Topic>,
    state: Mutex<GroupState>,
}

impl ConsumerGroup {
    pub fn new(group_id: &str, topic: Arc<Topic>) -> Self {
        let n = topic.partition_count();
        ConsumerGroup {
            group_id: group_id.to_string(),
            topic,
            state: Mutex::new(GroupState { assignment: vec![None; n], committed: vec![None; n], ..Default::default() }),
        }
    }

    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    pub fn topic(&self) -> &Arc<Topic> {
        &self.topic
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, GroupState> {
        self.state.lock().expect("group lock")
    }

    /// Adds a member, rebalances, and returns its partitions.
    pub fn join(&self, consumer: &str) -> Result<Vec<usize>, BrokerError> {
        let mut s = self.lock();
        if !s.members.insert(consumer.to_string()) {
            return Err(BrokerError::DuplicateMember(consumer.to_string()));
        }
        s.rebalance();
        Ok(Self::owned(&s, consumer))
    }

    pub fn leave(&self, consumer: &str) -> Result<(), BrokerError> {
        let mut s = self.lock();
        if !s.members.remove(consumer) {
            return Err(BrokerError::UnknownMember(consumer.to_string()));
        }
        s.cursor.remove(consumer);
        s.rebalance();
        Ok(())
    }

    fn owned(s: &GroupState, consumer: &str) -> Vec<usize> {
        s.assignment.iter().enumerate().filter(|(_, o)| o.as_deref() == Some(consumer)).map(|(p, _)| p).collect()
    }

    pub fn members(&self) -> Vec<String> {
        self.lock().members.iter().cloned().collect()
    }

    pub fn assignment(&self) -> Vec<Option<String>> {
        self.lock().assignment.clone()
    }

    pub fn assigned(&self, consumer: &str) -> Vec<usize> {
        Self::owned(&self.lock(), consumer)
    }

    pub fn generation(&self) -> u64 {
        self.lock().generation
    }

    pub fn committed(&self, partition: usize) -> Option<u64> {
        self.lock().committed[partition]
    }

    /// Up to `max` records from the member's partitions, each partition in
    /// offset order. The starting partition rotates between calls.
    pub fn poll(&self, consumer: &str, max: usize) -> Result<Vec<Record>, BrokerError> {
        let mut s = self.lock();
        if !s.members.contains(consumer) {
            return Err(BrokerError::UnknownMember(consumer.to_string()));
        }
        let owned = Self::owned(&s, consumer);
        let mut out = Vec::new();
        if owned.is_empty() {
            return Ok(out);
        }
        let start = s.cursor.get(consumer).copied().unwrap_or(0) % owned.len();
        s.cursor.insert(consumer.to_string(), start + 1);
        let positions = s.positions.get_mut(consumer).expect("member has positions");
        for k in 0..owned.len() {
            if out.len() >= max {
                break;
            }
            let p = owned[(start + k) % owned.len()];
            let pos = positions.entry(p).or_insert(0);
            let batch = self.topic.read(p, *pos, max - out.len());
            *pos += batch.len() as u64;
            out.extend(batch);
        }
        Ok(out)
    }

    /// Like [`poll`](Self::poll) but waits up to `timeout` for data when
    /// nothing is pending.
    pub fn poll_timeout(&self, consumer: &str, max: usize, timeout: Duration) -> Result<Vec<Record>, BrokerError> {
        let seen = self.topic.len();
        let batch = self.poll(consumer, max)?;
        if !batch.is_empty() || self.topic.is_closed() {
            return Ok(batch);
        }
        self.topic.wait_beyond(seen, timeout);
        self.poll(consumer, max)
    }

    /// Whether every partition owned by `consumer` has been fetched to its
    /// end.
    pub fn caught_up(&self, consumer: &str) -> bool {
        let s = self.lock();
        let Some(pos) = s.positions.get(consumer) else { return true };
        Self::owned(&s, consumer)
            .into_iter()
            .all(|p| pos.get(&p).copied().unwrap_or(0) >= self.topic.partition_len(p))
    }

    pub fn commit(&self, consumer: &str, partition: usize, offset: u64) -> Result<(), BrokerError> {
        let mut s = self.lock();
        if !s.members.contains(consumer) {
            return Err(BrokerError::UnknownMember(consumer.to_string()));
        }
        if s.assignment.get(partition).and_then(Option::as_deref) != Some(consumer) {
            return Err(BrokerError::NotAssigned { consumer: consumer.to_string(), partition });
        }
        if offset >= self.topic.partition_len(partition) {
            return Err(BrokerError::OffsetOutOfRange { partition, offset });
        }
        match s.committed[partition] {
            Some(c) if offset < c => {
                return Err(BrokerError::RewindRejected { partition, committed: c, offset });
            }
            _ => s.committed[partition] = Some(offset),
        }
        let pos = s.positions.get_mut(consumer).expect("member has positions").entry(partition).or_insert(0);
        *pos = (*pos).max(offset + 1);
        Ok(())
    }

    pub fn inspect(&self) -> Value {
        let s = self.lock();
        json!({
            "topic": self.topic.name(),
            "generation": s.generation,
            "members": s.members.iter().collect::<Vec<_>>(),
            "assignment": s.assignment,
            "committed": s.committed,
        })
    }
}

/// Registry of topics and consumer groups.
#[derive(Debug, Default)]
pub struct Broker {
    topics: RwLock<HashMap<String, Arc<Topic>>>,
    groups: Mutex<HashMap<String, Arc<ConsumerGroup>>>,
}

impl Broker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_topic(&self, name: &str, partitions: usize, replication_factor: u32) -> Result<Arc<Topic>, BrokerError> {
        if partitions == 0 {
            return Err(BrokerError::BadPartitionCount(partitions));
        }
        if replication_factor == 0 {
            return Err(BrokerError::BadReplicationFactor);
        }
        let mut topics = self.topics.write().expect("registry lock");
        if topics.contains_key(name) {
            return Err(BrokerError::DuplicateTopic(name.to_string()));
        }
        let t = Arc::new(Topic::new(name, partitions, replication_factor));
        topics.insert(name.to_string(), t.clone());
        Ok(t)
    }

    pub fn topic(&self, name: &str) -> Result<Arc<Topic>, BrokerError> {
        self.topics.read().expect("registry lock").get(name).cloned().ok_or_else(|| BrokerError::UnknownTopic(name.to_string()))
    }

    /// Appends now (by `clock`) to the named topic.
    pub fn produce(&self, topic: &str, key: &[u8], value: &[u8], clock: &dyn Clock) -> Result<(usize, u64), BrokerError> {
        Ok(self.topic(topic)?.produce_at(key, value, clock.now_ns()))
    }

    /// The group `group_id` on `topic`, created on first use.
    pub fn group(&self, group_id: &str, topic: &str) -> Result<Arc<ConsumerGroup>, BrokerError> {
        let t = self.topic(topic)?;
        let mut groups = self.groups.lock().expect("registry lock");
        Ok(groups.entry(group_id.to_string()).or_insert_with(|| Arc::new(ConsumerGroup::new(group_id, t))).clone())
    }

    pub fn existing_group(&self, group_id: &str) -> Result<Arc<ConsumerGroup>, BrokerError> {
        self.groups.lock().expect("registry lock").get(group_id).cloned().ok_or_else(|| BrokerError::UnknownGroup(group_id.to_string()))
    }

    pub fn storage_bytes(&self, topic: &str) -> Result<u64, BrokerError> {
        Ok(self.topic(topic)?.storage_bytes())
    }

    /// Partition sizes, storage, committed offsets and assignments.
    pub fn inspect(&self) -> Value {
        let topics = self.topics.read().expect("registry lock");
        let mut names: Vec<&String> = topics.keys().collect();
        names.sort();
        let topics_json: serde_json::Map<String, Value> = names
            .into_iter()
            .map(|n| {
                let t = &topics[n];
                let sizes: Vec<u64> = (0..t.partition_count()).map(|p| t.partition_len(p)).collect();
                (
                    n.clone(),
                    json!({
                        "partitions": sizes,
                        "replicationFactor": t.replication_factor(),
                        "storageBytes": t.storage_bytes(),
                        "closed": t.is_closed(),
                    }),
                )
            })
            .collect();
        let groups = self.groups.lock().expect("registry lock");
        let mut gnames: Vec<&String> = groups.keys().collect();
        gnames.sort();
        let groups_json: serde_json::Map<String, Value> =
            gnames.into_iter().map(|g| (g.clone(), groups[g].inspect())).collect();
        json!({ "topics": topics_json, "groups": groups_json })
    }
}

#[cfg(test)]
mod tests;
