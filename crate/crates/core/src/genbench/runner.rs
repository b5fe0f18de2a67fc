use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::generate::{consent_entries, gen_consents, gen_epoch, gen_events};
use super::metrics::{compute_stats, dedup_rows, write_latencies, write_series, write_throughput, LatencyRow, LatencyStats, StatsParams};
use super::resources::{ResourceSampler, Resources};
use super::{GenConfig, GenError, Scenario, TaskSpec};
use crate::broker::{run_checker, simulate, Broker, Checker, CheckerStats, Clock, ConsentStore, MonotonicClock, Topic, VirtualClock};
use crate::splog::{ComplianceRecord, JsonCodec, LogEntry};
use crate::vocab::{builtin_special, Taxonomy};

pub const APP_TOPIC: &str = "application-log";
pub const OUT_TOPIC: &str = "compliance-log";
pub const CHECKER_GROUP: &str = "compliance-checkers";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub checkers: usize,
    pub partitions: usize,
    pub replication_factor: u32,
    /// Extra time each data-event check takes: a sleep in real time, the
    /// whole service time in virtual time.
    pub injected_delay: Option<Duration>,
    /// Simulate instead of running threads against the wall clock.
    pub virtual_time: bool,
    pub seed: u64,
    pub stats: StatsParams,
    pub out_dir: Option<PathBuf>,
    /// Also write every application-log record to `events.jsonl`.
    pub dump_events: bool,
    /// Sample process CPU and memory at this interval (real time only).
    pub sample_resources: Option<Duration>,
    pub taxonomy: Option<Arc<Taxonomy>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checkers: 1,
            partitions: 10,
            replication_factor: 2,
            injected_delay: None,
            virtual_time: false,
            seed: 42,
            stats: StatsParams::default(),
            out_dir: None,
            dump_events: false,
            sample_resources: None,
            taxonomy: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckerSummary {
    pub consumer_id: String,
    pub checked: u64,
    pub consents: u64,
    pub errors: u64,
}

impl From<CheckerStats> for CheckerSummary {
    fn from(s: CheckerStats) -> Self {
        CheckerSummary { consumer_id: s.consumer_id, checked: s.checked, consents: s.consents, errors: s.errors }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageBytes {
    pub application_log: u64,
    pub compliance_log: u64,
}

/// Contents of `report.json`. The `latency` section is reproducible from
/// `latencies.csv`; the rest describes the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task_id: String,
    pub scenario: String,
    pub mode: String,
    pub users: u64,
    pub rate_ns: u64,
    pub seed: u64,
    pub checkers: u64,
    pub partitions: u64,
    pub replication_factor: u32,
    pub injected_delay_ns: Option<u64>,
    pub events_generated: u64,
    pub expected_compliant: u64,
    pub duplicates: u64,
    pub label_mismatches: u64,
    pub checker_stats: Vec<CheckerSummary>,
    pub storage_bytes: StorageBytes,
    pub resources: Resources,
    pub note: Option<String>,
    pub latency: LatencyStats,
}

/// Report plus the deduplicated result rows in completion order.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub rows: Vec<LatencyRow>,
}

pub fn run_task(spec: &TaskSpec, opts: &RunOptions) -> Result<RunOutcome, GenError> {
    run_config(&spec.task_id, spec.scenario, &spec.gen_config(opts.seed), opts)
}

fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::Streaming => "streaming",
        Scenario::Batch => "batch",
    }
}

/// Runs an arbitrary generator configuration through the pipeline.
pub fn run_config(task_id: &str, scenario: Scenario, cfg: &GenConfig, opts: &RunOptions) -> Result<RunOutcome, GenError> {
    if opts.checkers == 0 || opts.partitions == 0 {
        return Err(GenError::Config("checkers and partitions must be at least 1".into()));
    }
    let total = cfg.event_count().ok_or_else(|| GenError::Config("a benchmark run needs a bounded event count".into()))?;
    let t = opts.taxonomy.clone().unwrap_or_else(|| Arc::new(builtin_special()));
    let consents = gen_consents(cfg, &t)?;
    let codec = JsonCodec::new(t.prefixes().clone());

    let broker = Broker::new();
    let app = broker.create_topic(APP_TOPIC, opts.partitions, opts.replication_factor)?;
    let out = broker.create_topic(OUT_TOPIC, opts.partitions, opts.replication_factor)?;
    let group = broker.group(CHECKER_GROUP, APP_TOPIC)?;
    let store = Arc::new(ConsentStore::new());
    let checkers: Vec<Checker> =
        (0..opts.checkers).map(|i| Checker::new(format!("checker-{i}"), t.clone(), store.clone())).collect();
    for c in &checkers {
        group.join(&c.id)?;
    }

    let produce = |e: &LogEntry, at: u64| {
        let key = e.data_subject.as_deref().unwrap_or_default();
        app.produce_at(key.as_bytes(), codec.to_json(e).as_bytes(), at);
    };
    let mut labels: HashMap<String, bool> = HashMap::with_capacity(total as usize);
    let events = gen_events(cfg, &consents, &t)?;
    let delay = opts.injected_delay;
    let sampler = (!opts.virtual_time).then(|| opts.sample_resources.map(ResourceSampler::start)).flatten();

    let stats: Vec<CheckerStats> = if opts.virtual_time {
        let clock = VirtualClock::new(gen_epoch());
        for e in consent_entries(&consents) {
            produce(&e, 0);
        }
        for ev in events {
            let ev = ev?;
            let at = if scenario == Scenario::Batch { 0 } else { ev.scheduled_ns };
            produce(&ev.entry, at);
            labels.insert(ev.entry.entry_id, ev.expected_compliant);
        }
        app.close();
        let service = delay.map_or(0, |d| d.as_nanos() as u64);
        simulate(&group, &out, &checkers, &clock, service)?
    } else if scenario == Scenario::Batch {
        for e in consent_entries(&consents) {
            produce(&e, 0);
        }
        for ev in events {
            let ev = ev?;
            produce(&ev.entry, 0);
            labels.insert(ev.entry.entry_id, ev.expected_compliant);
        }
        app.close();
        // The clock starts once the log is loaded: latency is time since
        // the drain began.
        let clock = MonotonicClock::start();
        run_threads(&group, &out, &checkers, &clock, delay, || Ok(()))?
    } else {
        let clock = MonotonicClock::start();
        for e in consent_entries(&consents) {
            produce(&e, clock.now_ns());
        }
        let mut events = events;
        run_threads(&group, &out, &checkers, &clock, delay, || {
            for ev in events.by_ref() {
                let ev = ev?;
                let now = clock.now_ns();
                if ev.scheduled_ns > now {
                    std::thread::sleep(Duration::from_nanos(ev.scheduled_ns - now));
                }
                produce(&ev.entry, clock.now_ns());
                labels.insert(ev.entry.entry_id, ev.expected_compliant);
            }
            app.close();
            Ok(())
        })?
    };
    let resources = match sampler {
        Some(s) => s.finish(),
        None => Resources { available: false, interval_ms: 0, samples: Vec::new() },
    };

    let mut rows = collect_rows(&out, &codec)?;
    let duplicates = dedup_rows(&mut rows) as u64;
    let label_mismatches = rows.iter().filter(|r| labels.get(&r.event_id) != Some(&r.compliant)).count() as u64;
    let latency = compute_stats(&rows, opts.stats);
    let report = MetricsReport {
        task_id: task_id.to_string(),
        scenario: scenario_name(scenario).into(),
        mode: if opts.virtual_time { "virtual" } else { "real" }.into(),
        users: cfg.users as u64,
        rate_ns: cfg.rate.as_nanos() as u64,
        seed: cfg.seed,
        checkers: opts.checkers as u64,
        partitions: opts.partitions as u64,
        replication_factor: opts.replication_factor,
        injected_delay_ns: delay.map(|d| d.as_nanos() as u64),
        events_generated: labels.len() as u64,
        expected_compliant: labels.values().filter(|&&l| l).count() as u64,
        duplicates,
        label_mismatches,
        checker_stats: stats.into_iter().map(CheckerSummary::from).collect(),
        storage_bytes: StorageBytes { application_log: app.storage_bytes(), compliance_log: out.storage_bytes() },
        resources,
        note: rows.is_empty().then(|| "empty run: no results, percentiles undefined".to_string()),
        latency,
    };
    if let Some(dir) = &opts.out_dir {
        write_outputs(dir, &report, &rows, opts.dump_events.then_some(app.as_ref()))?;
    }
    Ok(RunOutcome { report, rows })
}

/// Starts one thread per checker, runs `producer` on the calling thread,
/// then waits for every checker to drain the closed topic.
fn run_threads(
    group: &crate::broker::ConsumerGroup,
    out: &Topic,
    checkers: &[Checker],
    clock: &dyn Clock,
    delay: Option<Duration>,
    producer: impl FnOnce() -> Result<(), GenError>,
) -> Result<Vec<CheckerStats>, GenError> {
    let stop = AtomicBool::new(false);
    std::thread::scope(|s| {
        let handles: Vec<_> = checkers
            .iter()
            .map(|c| {
                let stop = &stop;
                s.spawn(move || run_checker(group, &c.id, out, c, clock, delay, stop))
            })
            .collect();
        let produced = producer();
        if produced.is_err() {
            stop.store(true, std::sync::atomic::Ordering::Relaxed);
            group.topic().close();
        }
        let stats = handles
            .into_iter()
            .map(|h| h.join().expect("checker thread panicked").map_err(GenError::from))
            .collect::<Result<Vec<_>, _>>();
        produced?;
        stats
    })
}

fn collect_rows(out: &Topic, codec: &JsonCodec) -> Result<Vec<LatencyRow>, GenError> {
    out.records()
        .into_iter()
        .map(|r| {
            let rec: ComplianceRecord = codec.from_json(&String::from_utf8_lossy(&r.value))?;
            let event_id = rec.entry_id().map_or_else(|| format!("unparsed-{}-{}", r.partition, r.offset), str::to_string);
            Ok(LatencyRow {
                event_id,
                enqueue_ns: r.enqueue_ns.saturating_sub(rec.latency_ns),
                done_ns: r.enqueue_ns,
                latency_ns: rec.latency_ns,
                compliant: rec.compliant,
            })
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, GenError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes report.json, latencies.csv, series.csv, throughput.csv and, when
/// `events` is given, events.jsonl.
pub fn write_outputs(dir: &Path, report: &MetricsReport, rows: &[LatencyRow], events: Option<&Topic>) -> Result<(), GenError> {
    std::fs::create_dir_all(dir)?;
    let mut w = create(dir, "report.json")?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| GenError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    let mut w = create(dir, "latencies.csv")?;
    write_latencies(&mut w, rows)?;
    w.flush()?;
    let mut w = create(dir, "series.csv")?;
    write_series(&mut w, &report.latency.percentile_series)?;
    w.flush()?;
    let mut w = create(dir, "throughput.csv")?;
    write_throughput(&mut w, &report.latency.throughput_series)?;
    w.flush()?;
    if let Some(topic) = events {
        let mut w = create(dir, "events.jsonl")?;
        for r in topic.records() {
            w.write_all(&r.value)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    Ok(())
}
