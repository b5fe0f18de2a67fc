//! Browser bindings. Every export takes and returns plain strings so the page
//! needs no generated glue beyond wasm-bindgen's own. Results are JSON; errors
//! are human-readable messages.
//!
//! Nothing here reads a real clock: wasm32-unknown-unknown has none, so the
//! queue curve always runs in virtual time.

use std::sync::Arc;
use std::time::Duration;

use polcheck_core::broker::{partition_for, ConsumerGroup, Topic};
use polcheck_core::genbench::{run_config, GenConfig, RunOptions, Scenario, StatsParams};
use polcheck_core::reasoner::{complies, oracle_complies, DEFAULT_MAX_UNIVERSE};
use polcheck_core::samples;
use polcheck_core::splog::{JsonCodec, LogEntry};
use polcheck_core::vocab::{builtin_special, extend_taxonomy};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Default inputs for the page: the BeFit taxonomy, one gathering event and
/// the collection consent it falls under.
#[wasm_bindgen]
pub fn sample_inputs() -> String {
    let t = samples::befit_taxonomy();
    let codec = JsonCodec::new(t.prefixes().clone());
    let at = polcheck_core::genbench::gen_epoch();
    let event = LogEntry::event(
        "ev-sue-1",
        polcheck_core::splog::EntryKind::ProcessingEvent,
        "befit:Sue",
        at,
        samples::location_gathering(&t),
    );
    let consent = LogEntry::consent(
        "consent-sue",
        "befit:Sue",
        at,
        polcheck_core::policy::GeneralPolicy::single(samples::location_collection_consent(&t)),
    );
    json!({
        "taxonomy": samples::BEFIT_TAXONOMY,
        "content": pretty(&codec.to_json(&event)),
        "consent": pretty(&codec.to_json(&consent)),
    })
    .to_string()
}

fn pretty(s: &str) -> String {
    serde_json::from_str::<Value>(s).and_then(|v| serde_json::to_string_pretty(&v)).unwrap_or_else(|_| s.to_string())
}

/// Decides whether the event in `content` is covered by `consent`, both as
/// log entries or bare JSON, under the built-in vocabulary extended by
/// `taxonomy`.
#[wasm_bindgen]
pub fn check(taxonomy: &str, content: &str, consent: &str) -> Result<String, String> {
    let t = if taxonomy.trim().is_empty() {
        builtin_special()
    } else {
        extend_taxonomy(&builtin_special(), taxonomy).map_err(|e| format!("taxonomy: {e}"))?
    };
    let codec = JsonCodec::new(t.prefixes().clone());
    let c = parse_json(content, "content")?;
    let k = parse_json(consent, "consent")?;
    let usage = if c.get("kind").is_some() {
        let e: LogEntry = codec.from_json(content).map_err(|e| format!("content: {e}"))?;
        e.usage().cloned().ok_or("content: entry carries no event content")?
    } else {
        codec.usage_from_value(&c).map_err(|e| format!("content: {e}"))?
    };
    let policy = if k.get("kind").is_some() {
        let e: LogEntry = codec.from_json(consent).map_err(|e| format!("consent: {e}"))?;
        e.policy().cloned().ok_or("consent: entry carries no policy")?
    } else {
        codec.policy_from_value(&k).map_err(|e| format!("consent: {e}"))?
    };
    let r = complies(&usage, &policy, &t).map_err(|e| e.to_string())?;
    let oracle = oracle_complies(&usage, &policy, &t, DEFAULT_MAX_UNIVERSE).ok();
    Ok(json!({
        "compliant": r.compliant,
        "reason": r.reason.as_str(),
        "matchedBasic": r.matched_basic,
        "oracle": oracle,
    })
    .to_string())
}

fn parse_json(s: &str, what: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| format!("{what}: {e}"))
}

/// Simulated p50/p75/p95 per window for `users` subjects each emitting one
/// event every `rate_ms` for `seconds`, served by `checkers` in `service_us`
/// per event. Latency grows without bound once arrivals outpace service.
#[wasm_bindgen]
pub fn queue_curve(
    users: u32,
    rate_ms: u32,
    seconds: u32,
    service_us: u32,
    checkers: u32,
    window: u32,
) -> Result<String, String> {
    if users == 0 || rate_ms == 0 || seconds == 0 || checkers == 0 || window == 0 {
        return Err("every parameter except the service time must be positive".into());
    }
    let events = u64::from(users) * u64::from(seconds) * 1000 / u64::from(rate_ms);
    if events > 200_000 {
        return Err(format!("{events} events is too many for the page; stay under 200000"));
    }
    let cfg = GenConfig {
        rate: Duration::from_millis(rate_ms.into()),
        users: users as usize,
        test_time: Some(Duration::from_secs(seconds.into())),
        ..GenConfig::default()
    };
    let opts = RunOptions {
        checkers: checkers as usize,
        virtual_time: true,
        injected_delay: Some(Duration::from_micros(service_us.into())),
        stats: StatsParams { window: window as usize, ..StatsParams::default() },
        taxonomy: Some(Arc::new(builtin_special())),
        ..RunOptions::default()
    };
    let o = run_config("demo", Scenario::Streaming, &cfg, &opts).map_err(|e| e.to_string())?;
    let l = &o.report.latency;
    let offered = f64::from(users) * 1000.0 / f64::from(rate_ms);
    let capacity = if service_us == 0 { None } else { Some(f64::from(checkers) * 1e6 / f64::from(service_us)) };
    Ok(json!({
        "events": l.count,
        "offeredEps": offered,
        "capacityEps": capacity,
        "medianMs": l.median_ms,
        "p95Ms": l.p95_ms,
        "series": l.percentile_series,
    })
    .to_string())
}

/// Where each key lands among `partitions`, and which of `consumers`
/// group members owns each partition. `keys` is whitespace separated.
#[wasm_bindgen]
pub fn partition_view(keys: &str, partitions: u32, consumers: u32) -> Result<String, String> {
    if partitions == 0 {
        return Err("at least one partition".into());
    }
    let topic = Arc::new(Topic::new("demo", partitions as usize, 1));
    let group = ConsumerGroup::new("demo", topic);
    for i in 0..consumers {
        group.join(&format!("checker-{i}")).map_err(|e| e.to_string())?;
    }
    let mut per_partition = vec![Vec::<&str>::new(); partitions as usize];
    for k in keys.split_whitespace() {
        per_partition[partition_for(k.as_bytes(), partitions as usize)].push(k);
    }
    let rows: Vec<Value> = group
        .assignment()
        .into_iter()
        .zip(&per_partition)
        .enumerate()
        .map(|(p, (owner, ks))| json!({ "partition": p, "owner": owner, "keys": ks }))
        .collect();
    let idle: Vec<String> = group.members().into_iter().filter(|m| group.assigned(m).is_empty()).collect();
    Ok(json!({ "partitions": rows, "idle": idle }).to_string())
}
