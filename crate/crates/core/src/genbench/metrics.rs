//! Latency statistics. Everything in [`LatencyStats`] is a function of the
//! rows of `latencies.csv` plus the window and warm-up settings, so it can
//! be recomputed offline. Arithmetic is chosen to be reproducible in any
//! IEEE-754 language: integer nanoseconds are converted once and divided
//! once.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::GenError;

/// Nearest-rank percentile: the element at 1-based rank `ceil(p/100 * n)`
/// of the sorted input. Integral `p` uses exact integer arithmetic.
pub fn percentile(values: &[u64], p: f64) -> Result<u64, GenError> {
    if values.is_empty() {
        return Err(GenError::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Ok(percentile_sorted(&v, p))
}

fn rank(n: usize, p: f64) -> usize {
    assert!(p > 0.0 && p <= 100.0, "percentile {p} outside (0, 100]");
    let r = if p.fract() == 0.0 {
        (p as usize * n).div_ceil(100)
    } else {
        (p / 100.0 * n as f64).ceil() as usize
    };
    r.clamp(1, n)
}

/// As [`percentile`] on already sorted, non-empty input.
pub fn percentile_sorted(sorted: &[u64], p: f64) -> u64 {
    sorted[rank(sorted.len(), p) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    /// One past the last event index of the window.
    pub window_end: u64,
    pub p50_ms: f64,
    pub p75_ms: f64,
    pub p95_ms: f64,
}

pub fn ns_to_ms(ns: u64) -> f64 {
    ns as f64 / 1e6
}

/// Percentiles per disjoint window of `window` consecutive latencies (a
/// shorter trailing window included), or over each growing prefix when
/// `cumulative`.
pub fn windowed_percentiles(latencies: &[u64], window: usize, cumulative: bool) -> Vec<WindowRow> {
    assert!(window >= 1, "window must be positive");
    let mut rows = Vec::new();
    let mut start = 0;
    while start < latencies.len() {
        let end = (start + window).min(latencies.len());
        let mut w = latencies[if cumulative { 0 } else { start }..end].to_vec();
        w.sort_unstable();
        rows.push(WindowRow {
            window_end: end as u64,
            p50_ms: ns_to_ms(percentile_sorted(&w, 50.0)),
            p75_ms: ns_to_ms(percentile_sorted(&w, 75.0)),
            p95_ms: ns_to_ms(percentile_sorted(&w, 95.0)),
        });
        start = end;
    }
    rows
}

/// One line of `latencies.csv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatencyRow {
    pub event_id: String,
    pub enqueue_ns: u64,
    pub done_ns: u64,
    pub latency_ns: u64,
    pub compliant: bool,
}

/// Sorts by completion and keeps the first result per event, dropping the
/// redeliveries that at-least-once processing can produce. Returns how
/// many rows were dropped.
pub fn dedup_rows(rows: &mut Vec<LatencyRow>) -> usize {
    rows.sort_by(|a, b| (a.done_ns, &a.event_id).cmp(&(b.done_ns, &b.event_id)));
    let before = rows.len();
    let mut seen = HashSet::new();
    rows.retain(|r| seen.insert(r.event_id.clone()));
    before - rows.len()
}

pub const LATENCY_HEADER: &str = "event_id,enqueue_ns,done_ns,latency_ns,compliant";

pub fn write_latencies<W: Write>(mut w: W, rows: &[LatencyRow]) -> std::io::Result<()> {
    writeln!(w, "{LATENCY_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.event_id, r.enqueue_ns, r.done_ns, r.latency_ns, r.compliant as u8)?;
    }
    Ok(())
}

pub fn read_latencies<R: BufRead>(r: R) -> Result<Vec<LatencyRow>, GenError> {
    let mut lines = r.lines();
    let bad = |n: usize, why: &str| GenError::Csv { line: n, message: why.to_string() };
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == LATENCY_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.map_err(|e| bad(n, &e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(n, "expected 5 fields"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad(n, &format!("not an integer: {s:?}")));
        rows.push(LatencyRow {
            event_id: f[0].to_string(),
            enqueue_ns: num(f[1])?,
            done_ns: num(f[2])?,
            latency_ns: num(f[3])?,
            compliant: match f[4] {
                "1" => true,
                "0" => false,
                other => return Err(bad(n, &format!("compliant must be 0 or 1, got {other:?}"))),
            },
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRow {
    pub second: u64,
    pub events: u64,
}

/// Latency and throughput statistics of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub compliant: u64,
    pub window: u64,
    pub cumulative: bool,
    pub warmup_pct: u64,
    pub warmup_events: u64,
    pub median_ms: Option<f64>,
    /// Mean of whole-nanosecond latencies, truncated to a whole
    /// nanosecond before conversion.
    pub mean_ms: Option<f64>,
    pub p75_ms: Option<f64>,
    pub p95_ms: Option<f64>,
    pub p99_ms: Option<f64>,
    pub max_ms: Option<f64>,
    pub post_warmup_median_ms: Option<f64>,
    pub post_warmup_p95_ms: Option<f64>,
    /// Last completion minus first enqueue.
    pub span_ns: u64,
    pub throughput_total_eps: Option<f64>,
    pub percentile_series: Vec<WindowRow>,
    pub throughput_series: Vec<ThroughputRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StatsParams {
    pub window: usize,
    pub cumulative: bool,
    /// Share of the earliest-completed events treated as warm-up.
    pub warmup_pct: u8,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams { window: 1000, cumulative: false, warmup_pct: 10 }
    }
}

/// Statistics over rows in completion order (see [`dedup_rows`]).
pub fn compute_stats(rows: &[LatencyRow], params: StatsParams) -> LatencyStats {
    let n = rows.len();
    let lat: Vec<u64> = rows.iter().map(|r| r.latency_ns).collect();
    let mut sorted = lat.clone();
    sorted.sort_unstable();
    let pct = |p: f64| (!sorted.is_empty()).then(|| ns_to_ms(percentile_sorted(&sorted, p)));
    let warmup = n * params.warmup_pct as usize / 100;
    let mut post: Vec<u64> = lat[warmup..].to_vec();
    post.sort_unstable();
    let post_pct = |p: f64| (!post.is_empty()).then(|| ns_to_ms(percentile_sorted(&post, p)));
    let sum: u128 = lat.iter().map(|&x| x as u128).sum();
    let span_ns = match (rows.iter().map(|r| r.enqueue_ns).min(), rows.iter().map(|r| r.done_ns).max()) {
        (Some(a), Some(b)) => b.saturating_sub(a),
        _ => 0,
    };
    let mut throughput_series: Vec<ThroughputRow> = Vec::new();
    for r in rows {
        let second = r.done_ns / 1_000_000_000;
        match throughput_series.last_mut() {
            Some(t) if t.second == second => t.events += 1,
            _ => throughput_series.push(ThroughputRow { second, events: 1 }),
        }
    }
    LatencyStats {
        count: n as u64,
        compliant: rows.iter().filter(|r| r.compliant).count() as u64,
        window: params.window as u64,
        cumulative: params.cumulative,
        warmup_pct: params.warmup_pct as u64,
        warmup_events: warmup as u64,
        median_ms: pct(50.0),
        mean_ms: (n > 0).then(|| ns_to_ms((sum / n as u128) as u64)),
        p75_ms: pct(75.0),
        p95_ms: pct(95.0),
        p99_ms: pct(99.0),
        max_ms: pct(100.0),
        post_warmup_median_ms: post_pct(50.0),
        post_warmup_p95_ms: post_pct(95.0),
        span_ns,
        throughput_total_eps: (span_ns > 0).then(|| n as f64 / (span_ns as f64 / 1e9)),
        percentile_series: windowed_percentiles(&lat, params.window, params.cumulative),
        throughput_series,
    }
}

pub fn write_series<W: Write>(mut w: W, rows: &[WindowRow]) -> std::io::Result<()> {
    writeln!(w, "window_end,p50_ms,p75_ms,p95_ms")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.window_end, r.p50_ms, r.p75_ms, r.p95_ms)?;
    }
    Ok(())
}

pub fn write_throughput<W: Write>(mut w: W, rows: &[ThroughputRow]) -> std::io::Result<()> {
    writeln!(w, "second,events")?;
    for r in rows {
        writeln!(w, "{},{}", r.second, r.events)?;
    }
    Ok(())
}
