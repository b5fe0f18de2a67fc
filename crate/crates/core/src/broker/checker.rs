use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::{BrokerError, Clock, ConsentState, ConsentStore, ConsumerGroup, Record, Topic};
use crate::reasoner::{ComplianceResult, Reason};
use crate::splog::{ComplianceRecord, JsonCodec, LogEntry};
use crate::vocab::Taxonomy;

/// Turns application-log records into compliance records. Consent entries
/// update the shared store and produce no output.
#[derive(Clone)]
pub struct Checker {
    pub id: String,
    taxonomy: Arc<Taxonomy>,
    store: Arc<ConsentStore>,
    codec: JsonCodec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckerStats {
    pub consumer_id: String,
    /// Data events checked, including duplicates after a rebalance.
    pub checked: u64,
    pub consents: u64,
    pub errors: u64,
}

impl Checker {
    pub fn new(id: impl Into<String>, taxonomy: Arc<Taxonomy>, store: Arc<ConsentStore>) -> Self {
        let codec = JsonCodec::new(taxonomy.prefixes().clone());
        Checker { id: id.into(), taxonomy, store, codec }
    }

    pub fn store(&self) -> &Arc<ConsentStore> {
        &self.store
    }

    /// Processes one record. `finish` runs after the verdict is known and
    /// returns the completion time in clock nanoseconds; it is where an
    /// injected service delay belongs.
    pub fn handle(&self, rec: &Record, clock: &dyn Clock, finish: impl FnOnce() -> u64) -> Option<ComplianceRecord> {
        let entry: LogEntry = match self.codec.from_json(&String::from_utf8_lossy(&rec.value)) {
            Ok(e) => e,
            Err(err) => {
                let done = finish();
                return Some(self.record(None, ComplianceResult::rejected(Reason::NoMatch), None, Some(err.to_string()), rec, done, clock));
            }
        };
        if entry.kind.is_consent() {
            self.store.apply(&entry, &self.taxonomy);
            return None;
        }
        let (result, consent_id, error) = self.verdict(&entry);
        let done = finish();
        Some(self.record(Some(entry), result, consent_id, error, rec, done, clock))
    }

    fn verdict(&self, e: &LogEntry) -> (ComplianceResult, Option<String>, Option<String>) {
        let Some(user) = &e.data_subject else {
            return (ComplianceResult::rejected(Reason::NoConsent), None, None);
        };
        match self.store.resolve(user, e.validity_time) {
            ConsentState::NoConsent => (ComplianceResult::rejected(Reason::NoConsent), None, None),
            ConsentState::Revoked { entry_id } => (ComplianceResult::rejected(Reason::Revoked), Some(entry_id), None),
            ConsentState::Invalid { entry_id, error } => {
                (ComplianceResult::rejected(Reason::NoMatch), Some(entry_id), Some(format!("consent: {error}")))
            }
            ConsentState::Active { entry_id, compiled, .. } => {
                let content = e.usage().expect("data events carry usage content");
                match compiled.check(content, &self.taxonomy) {
                    Ok(r) => (r, Some(entry_id), None),
                    Err(err) => (ComplianceResult::rejected(Reason::NoMatch), Some(entry_id), Some(err.to_string())),
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        entry: Option<LogEntry>,
        result: ComplianceResult,
        consent_entry_id: Option<String>,
        error: Option<String>,
        rec: &Record,
        done_ns: u64,
        clock: &dyn Clock,
    ) -> ComplianceRecord {
        ComplianceRecord {
            entry,
            compliant: result.compliant,
            reason: result.reason,
            consent_entry_id,
            checker_id: self.id.clone(),
            check_time: crate::splog::to_millis(clock.wall(done_ns)),
            latency_ns: done_ns.saturating_sub(rec.enqueue_ns),
            error,
        }
    }

    pub fn encode(&self, r: &ComplianceRecord) -> Vec<u8> {
        self.codec.to_json(r).into_bytes()
    }
}

fn out_key(r: &ComplianceRecord, rec: &Record) -> Vec<u8> {
    match r.entry.as_ref().and_then(|e| e.data_subject.as_deref()) {
        Some(u) => u.as_bytes().to_vec(),
        None => rec.key.to_vec(),
    }
}

/// Consumes `group` as `consumer` until `stop` is set or the input topic is
/// closed and fully fetched. Each result is appended to `out` before its
/// offset is committed, so delivery is at least once.
pub fn run_checker(
    group: &ConsumerGroup,
    consumer: &str,
    out: &Topic,
    checker: &Checker,
    clock: &dyn Clock,
    service_delay: Option<Duration>,
    stop: &AtomicBool,
) -> Result<CheckerStats, BrokerError> {
    let mut stats = CheckerStats { consumer_id: consumer.to_string(), ..Default::default() };
    loop {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let batch = group.poll_timeout(consumer, 64, Duration::from_millis(5))?;
        if batch.is_empty() {
            if group.topic().is_closed() && group.caught_up(consumer) {
                break;
            }
            continue;
        }
        for rec in &batch {
            let mut done = 0;
            let result = checker.handle(rec, clock, || {
                if let Some(d) = service_delay {
                    std::thread::sleep(d);
                }
                done = clock.now_ns();
                done
            });
            match result {
                Some(r) => {
                    stats.checked += 1;
                    stats.errors += r.error.is_some() as u64;
                    // Stamped with the completion time so that enqueue time
                    // is recoverable as done - latency.
                    out.produce_at(&out_key(&r, rec), &checker.encode(&r), done);
                }
                None => stats.consents += 1,
            }
            match group.commit(consumer, rec.partition, rec.offset) {
                Ok(()) => {}
                // Lost the partition in a rebalance; the new owner redoes it.
                Err(BrokerError::NotAssigned { .. }) | Err(BrokerError::RewindRejected { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(stats)
}

type Finished = (u64, usize, u64, Vec<u8>, Vec<u8>);

/// Discrete-event run of every member of `group` in virtual time. Each
/// member serves its records first-come first-served by enqueue time; a
/// data event occupies it for `service_ns`, a consent entry for no time.
/// Results are appended to `out` in completion order, stamped with their
/// completion time.
pub fn simulate(
    group: &ConsumerGroup,
    out: &Topic,
    checkers: &[Checker],
    clock: &dyn Clock,
    service_ns: u64,
) -> Result<Vec<CheckerStats>, BrokerError> {
    // (done, checker, seq, key, value); sorting the first three fixes output order.
    let mut finished: Vec<Finished> = Vec::new();
    let mut all_stats = Vec::new();
    for (ci, checker) in checkers.iter().enumerate() {
        let consumer = checker.id.as_str();
        let mut stats = CheckerStats { consumer_id: consumer.to_string(), ..Default::default() };
        let mut queue = group.poll(consumer, usize::MAX)?;
        queue.sort_by_key(|r| (r.enqueue_ns, r.partition, r.offset));
        let mut free_at = 0u64;
        let mut last: BTreeMap<usize, u64> = BTreeMap::new();
        for (seq, rec) in queue.iter().enumerate() {
            let start = free_at.max(rec.enqueue_ns);
            let mut done = start;
            let result = checker.handle(rec, clock, || {
                done = start + service_ns;
                done
            });
            match result {
                Some(r) => {
                    stats.checked += 1;
                    stats.errors += r.error.is_some() as u64;
                    finished.push((done, ci, seq as u64, out_key(&r, rec), checker.encode(&r)));
                }
                None => stats.consents += 1,
            }
            free_at = done;
            last.insert(rec.partition, rec.offset);
        }
        for (p, o) in last {
            group.commit(consumer, p, o)?;
        }
        all_stats.push(stats);
    }
    finished.sort_by_key(|(done, ci, seq, _, _)| (*done, *ci, *seq));
    for (done, _, _, key, value) in finished {
        out.produce_at(&key, &value, done);
    }
    Ok(all_stats)
}
