use std::sync::atomic::AtomicBool;

use chrono::{DateTime, Duration as ChronoDuration, Utc};

use super::*;
use crate::policy::GeneralPolicy;
use crate::samples::{befit_taxonomy, location_collection_consent, location_gathering};
use crate::splog::{to_json, EntryKind, JsonCodec, LogEntry, SplogJson};

fn at(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
}

fn epoch() -> DateTime<Utc> {
    at("2018-01-01T00:00:00Z")
}

#[test]
fn fnv_reference_values() {
    assert_eq!(stable_hash(b""), 14695981039346656037);
    assert_eq!(stable_hash(b"a"), 12638187200555641996);
}

#[test]
fn create_topic_examples() {
    let b = Broker::new();
    let t = b.create_topic("application-log", 10, 2).unwrap();
    assert_eq!(t.partition_count(), 10);
    assert!((0..10).all(|p| t.partition_len(p) == 0));
    assert_eq!(b.create_topic("single", 1, 1).unwrap().partition_count(), 1);
    assert_eq!(b.create_topic("single", 1, 1).unwrap_err(), BrokerError::DuplicateTopic("single".into()));
    assert_eq!(b.create_topic("none", 0, 1).unwrap_err(), BrokerError::BadPartitionCount(0));
}

#[test]
fn same_key_same_partition_consecutive_offsets() {
    let b = Broker::new();
    b.create_topic("t", 10, 1).unwrap();
    let clock = VirtualClock::new(epoch());
    let (p1, o1) = b.produce("t", b"user7", b"a", &clock).unwrap();
    let (p2, o2) = b.produce("t", b"user7", b"b", &clock).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(o2, o1 + 1);
    assert_eq!(b.produce("missing", b"k", b"v", &clock).unwrap_err(), BrokerError::UnknownTopic("missing".into()));
}

/// Per-partition counts for keys user0..user999, ten records each,
/// computed with an independent FNV-1a implementation.
#[test]
fn thousand_users_spread_over_ten_partitions() {
    let t = Topic::new("t", 10, 1);
    for i in 0..10_000 {
        t.produce_at(format!("user{}", i % 1000).as_bytes(), b"x", 0);
    }
    let counts: Vec<u64> = (0..10).map(|p| t.partition_len(p)).collect();
    assert_eq!(counts, [1070, 1070, 920, 920, 1040, 1040, 1030, 1030, 940, 940]);
}

#[test]
fn join_and_leave_rebalance() {
    let t = Arc::new(Topic::new("t", 10, 1));
    let g = ConsumerGroup::new("g", t);
    assert_eq!(g.join("a").unwrap().len(), 10);
    assert_eq!(g.join("b").unwrap().len(), 5);
    assert_eq!(g.assigned("a").len(), 5);
    assert_eq!(g.join("a").unwrap_err(), BrokerError::DuplicateMember("a".into()));
    g.leave("a").unwrap();
    g.leave("b").unwrap();
    assert!(g.assignment().iter().all(Option::is_none));
    assert_eq!(g.leave("b").unwrap_err(), BrokerError::UnknownMember("b".into()));
}

#[test]
fn eleventh_member_is_idle() {
    let t = Arc::new(Topic::new("t", 10, 1));
    let g = ConsumerGroup::new("g", t);
    for i in 0..11 {
        g.join(&format!("c{i:02}")).unwrap();
    }
    let sizes: Vec<usize> = (0..11).map(|i| g.assigned(&format!("c{i:02}")).len()).collect();
    assert_eq!(sizes.iter().filter(|&&n| n == 0).count(), 1);
    assert_eq!(sizes.iter().sum::<usize>(), 10);
}

#[test]
fn poll_and_commit() {
    let t = Arc::new(Topic::new("t", 1, 1));
    let g = ConsumerGroup::new("g", t.clone());
    g.join("a").unwrap();
    for v in [b"0", b"1", b"2"] {
        t.produce_at(b"k", v, 0);
    }
    let got: Vec<u64> = g.poll("a", 10).unwrap().iter().map(|r| r.offset).collect();
    assert_eq!(got, [0, 1, 2]);
    assert!(g.poll("a", 10).unwrap().is_empty());
    g.commit("a", 0, 0).unwrap();
    // A rebalance rewinds to the committed offset + 1.
    g.join("b").unwrap();
    g.leave("b").unwrap();
    let got: Vec<u64> = g.poll("a", 10).unwrap().iter().map(|r| r.offset).collect();
    assert_eq!(got, [1, 2]);
    g.commit("a", 0, 2).unwrap();
    assert_eq!(g.commit("a", 0, 1).unwrap_err(), BrokerError::RewindRejected { partition: 0, committed: 2, offset: 1 });
    assert!(matches!(g.commit("a", 0, 9), Err(BrokerError::OffsetOutOfRange { .. })));
    assert!(matches!(g.poll("zed", 1), Err(BrokerError::UnknownMember(_))));
}

#[test]
fn commit_requires_ownership() {
    let t = Arc::new(Topic::new("t", 2, 1));
    let g = ConsumerGroup::new("g", t.clone());
    g.join("a").unwrap();
    g.join("b").unwrap();
    t.produce_at(b"k", b"v", 0);
    let p = partition_for(b"k", 2);
    let owner = g.assignment()[p].clone().unwrap();
    let other = if owner == "a" { "b" } else { "a" };
    assert_eq!(g.commit(other, p, 0).unwrap_err(), BrokerError::NotAssigned { consumer: other.into(), partition: p });
}

#[test]
fn storage_accounting() {
    let t = Topic::new("t", 3, 2);
    assert_eq!(t.storage_bytes(), 0);
    t.produce_at(b"12345678", &[0u8; 100], 0);
    assert_eq!(t.storage_bytes(), 248);
}

#[test]
fn consent_resolution() {
    let t = befit_taxonomy();
    let store = ConsentStore::new();
    let policy = GeneralPolicy::single(location_collection_consent(&t));
    let t1 = at("2018-01-01T00:00:00Z");
    assert!(matches!(store.resolve("sue", t1), ConsentState::NoConsent));
    store.apply(&LogEntry::consent("c1", "sue", t1, policy.clone()), &t);
    assert!(matches!(store.resolve("sue", t1 - ChronoDuration::seconds(1)), ConsentState::NoConsent));
    assert!(matches!(store.resolve("sue", t1 + ChronoDuration::seconds(1)), ConsentState::Active { ref entry_id, .. } if entry_id == "c1"));
    let t2 = t1 + ChronoDuration::days(1);
    store.apply(&LogEntry::revocation("r1", "sue", t2, Some("c1".into())), &t);
    assert!(matches!(store.resolve("sue", t2 + ChronoDuration::seconds(1)), ConsentState::Revoked { .. }));
    let t3 = t2 + ChronoDuration::days(1);
    let mut second = location_collection_consent(&t);
    second.purpose = crate::policy::ClassExpr::Top(crate::vocab::Category::Purpose);
    store.apply(&LogEntry::consent("c2", "sue", t3, GeneralPolicy::single(second.clone())), &t);
    match store.resolve("sue", t3 + ChronoDuration::seconds(1)) {
        ConsentState::Active { entry_id, policy, .. } => {
            assert_eq!(entry_id, "c2");
            assert_eq!(policy.basics()[0], second);
        }
        other => panic!("{other:?}"),
    }
    // Back in time, the first consent still applies.
    assert!(matches!(store.resolve("sue", t1 + ChronoDuration::hours(1)), ConsentState::Active { ref entry_id, .. } if entry_id == "c1"));
}

fn pipeline() -> (Broker, Arc<Topic>, Arc<Topic>, Arc<ConsumerGroup>, Checker) {
    let b = Broker::new();
    let app = b.create_topic("application-log", 4, 2).unwrap();
    let out = b.create_topic("compliance-log", 4, 2).unwrap();
    let g = b.group("checkers", "application-log").unwrap();
    let t = Arc::new(befit_taxonomy());
    let checker = Checker::new("checker-0", t, Arc::new(ConsentStore::new()));
    (b, app, out, g, checker)
}

fn encode(e: &LogEntry) -> Vec<u8> {
    JsonCodec::new(befit_taxonomy().prefixes().clone()).to_json(e).into_bytes()
}

fn decode_out(out: &Topic) -> Vec<ComplianceRecord> {
    let codec = JsonCodec::new(befit_taxonomy().prefixes().clone());
    out.records().iter().map(|r| codec.from_json(std::str::from_utf8(&r.value).unwrap()).unwrap()).collect()
}

use crate::splog::ComplianceRecord;

#[test]
fn checker_marks_consented_event_compliant() {
    let (_b, app, out, g, checker) = pipeline();
    let t = befit_taxonomy();
    let t0 = at("2018-01-10T13:00:00Z");
    app.produce_at(b"sue", &encode(&LogEntry::consent("c1", "sue", t0, GeneralPolicy::single(location_collection_consent(&t)))), 0);
    let ev = LogEntry::event("e1", EntryKind::ProcessingEvent, "sue", t0 + ChronoDuration::minutes(20), location_gathering(&t));
    app.produce_at(b"sue", &encode(&ev), 0);
    let ghost = LogEntry::event("e2", EntryKind::ProcessingEvent, "bob", t0, location_gathering(&t));
    app.produce_at(b"bob", &encode(&ghost), 0);
    app.produce_at(b"bob", b"{not json", 0);
    app.close();
    g.join("checker-0").unwrap();
    let clock = VirtualClock::new(epoch());
    let stats = run_checker(&g, "checker-0", &out, &checker, &clock, None, &AtomicBool::new(false)).unwrap();
    assert_eq!(stats, CheckerStats { consumer_id: "checker-0".into(), checked: 3, consents: 1, errors: 1 });
    let recs = decode_out(&out);
    let by_id = |id: &str| recs.iter().find(|r| r.entry_id() == Some(id)).unwrap().clone();
    let e1 = by_id("e1");
    assert!(e1.compliant);
    assert_eq!(e1.consent_entry_id.as_deref(), Some("c1"));
    assert_eq!(by_id("e2").reason, Reason::NoConsent);
    let poison = recs.iter().find(|r| r.entry.is_none()).unwrap();
    assert_eq!(poison.reason, Reason::NoMatch);
    assert!(poison.error.is_some());
    let committed: u64 = (0..4).filter_map(|p| g.committed(p).map(|o| o + 1)).sum();
    assert_eq!(committed, 4);
}

use crate::reasoner::Reason;

#[test]
fn simulation_queues_behind_a_busy_checker() {
    let (_b, app, out, g, checker) = pipeline();
    let t = befit_taxonomy();
    let t0 = at("2018-01-10T13:00:00Z");
    app.produce_at(b"sue", &encode(&LogEntry::consent("c1", "sue", t0, GeneralPolicy::single(location_collection_consent(&t)))), 0);
    for i in 0..5u64 {
        let ev = LogEntry::event(format!("e{i}"), EntryKind::ProcessingEvent, "sue", t0 + ChronoDuration::minutes(1), location_gathering(&t));
        app.produce_at(b"sue", &encode(&ev), i * 1_000_000);
    }
    g.join("checker-0").unwrap();
    let clock = VirtualClock::new(epoch());
    let stats = simulate(&g, &out, &[checker], &clock, 2_000_000).unwrap();
    assert_eq!(stats[0].checked, 5);
    let lat: Vec<u64> = decode_out(&out).iter().map(|r| r.latency_ns).collect();
    // Arrivals every 1 ms, service 2 ms: each waits 1 ms longer than the last.
    assert_eq!(lat, [2_000_000, 3_000_000, 4_000_000, 5_000_000, 6_000_000]);
    let done: Vec<u64> = out.records().iter().map(|r| r.enqueue_ns).collect();
    assert_eq!(done, [2_000_000, 4_000_000, 6_000_000, 8_000_000, 10_000_000]);
}

#[test]
fn inspect_reports_layout() {
    let (b, app, _out, g, _checker) = pipeline();
    app.produce_at(b"k", b"v", 0);
    g.join("x").unwrap();
    let v = b.inspect();
    assert_eq!(v["topics"]["application-log"]["partitions"].as_array().unwrap().len(), 4);
    assert_eq!(v["topics"]["application-log"]["storageBytes"], 2 * (1 + 1 + 16));
    assert_eq!(v["groups"]["checkers"]["members"][0], "x");
    let _ = to_json(&LogEntry::revocation("r", "u", epoch(), None));
    let _ = <LogEntry as SplogJson>::to_value;
}
