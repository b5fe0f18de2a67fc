//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; exits non-zero if any fails. Timing-sensitive
//! criteria run alone, which is why this target has no test harness.

mod common;

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use polcheck_core::genbench::{
    self, consent_entries, gen_consents, gen_events, lookup_task, percentile, run_config, GenConfig, RunOptions, RunOutcome,
    Scenario, StatsParams,
};
use polcheck_core::policy::{ClassExpr, DurationExpr, GeneralPolicy};
use polcheck_core::reasoner::{complies, oracle_complies, DEFAULT_MAX_UNIVERSE};
use polcheck_core::samples::{befit_taxonomy, location_collection_consent, location_gathering};
use polcheck_core::splog::{from_json, to_json, LogEntry, TtlWriter};
use polcheck_core::vocab::{builtin_special, Category, Taxonomy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const MAX_DAYS: u32 = 730;

fn random_duration<R: Rng>(rng: &mut R, t: &Taxonomy) -> DurationExpr {
    if rng.random_bool(0.15) {
        let classes = t.classes_in(Category::Duration);
        return DurationExpr::Class(t.class(classes[rng.random_range(0..classes.len())]).clone());
    }
    let min = rng.random_range(0..=MAX_DAYS);
    if rng.random_bool(0.3) {
        DurationExpr::at_least(min)
    } else {
        DurationExpr::between(min, rng.random_range(min..=MAX_DAYS))
    }
}

fn clamp_days(d: &mut DurationExpr) {
    if let DurationExpr::Interval { min_days, max_days } = d {
        *min_days = (*min_days).min(MAX_DAYS);
        if let Some(m) = max_days {
            *m = (*m).clamp(*min_days, MAX_DAYS);
        }
    }
}

fn reasoner_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut t = genbench::synth::taxonomy(&mut rng, 40);
    let (mut disagreements, mut compliant) = (0, 0);
    const PAIRS: usize = 10_000;
    for i in 0..PAIRS {
        if i % 50 == 0 {
            t = genbench::synth::taxonomy(&mut rng, 40);
        }
        let mut consent = genbench::synth::general(&mut rng, &t, 3, 1);
        let basics: Vec<_> = consent
            .basics()
            .iter()
            .cloned()
            .map(|mut b| {
                b.storage.duration = random_duration(&mut rng, &t);
                b
            })
            .collect();
        consent = GeneralPolicy::new(basics).unwrap();
        let mut content = if rng.random_bool(0.5) {
            let j = rng.random_range(0..consent.basics().len());
            genbench::synth::specialise(&mut rng, &t, &consent.basics()[j])
        } else {
            let mut c = genbench::synth::basic(&mut rng, &t, 1);
            c.storage.duration = random_duration(&mut rng, &t);
            c
        };
        clamp_days(&mut content.storage.duration);
        let fast = complies(&content, &consent, &t).map_err(|e| e.to_string())?.compliant;
        let slow = oracle_complies(&content, &consent, &t, DEFAULT_MAX_UNIVERSE).map_err(|e| e.to_string())?;
        disagreements += (fast != slow) as usize;
        compliant += slow as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(disagreements == 0, || format!("{disagreements} disagreements"))?;
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{PAIRS} pairs, {compliant} compliant, 0 disagreements, {secs:.1} s"))
}

fn listing_scenario() -> Outcome {
    let t = befit_taxonomy();
    let consent = GeneralPolicy::single(location_collection_consent(&t));
    let content = location_gathering(&t);
    let ok = complies(&content, &consent, &t).map_err(|e| e.to_string())?;
    ensure(ok.compliant && ok.matched_basic == Some(0), || format!("gathering verdict {ok:?}"))?;
    let mut marketing = content.clone();
    marketing.purpose = ClassExpr::Atom(t.resolve("svpu:Marketing").map_err(|e| e.to_string())?);
    let bad = complies(&marketing, &consent, &t).map_err(|e| e.to_string())?;
    let oracle = oracle_complies(&marketing, &consent, &t, DEFAULT_MAX_UNIVERSE).map_err(|e| e.to_string())?;
    ensure(!bad.compliant && !oracle, || format!("marketing verdict {bad:?}, oracle {oracle}"))?;
    Ok("gathering compliant; marketing purpose non-compliant, oracle agrees".into())
}

fn virtual_opts(checkers: usize) -> RunOptions {
    RunOptions { checkers, partitions: 10, virtual_time: true, ..Default::default() }
}

fn event_count_exactness() -> Outcome {
    let full = lookup_task("C-T4-4").map_err(|e| e.to_string())?;
    let dry = full.event_count();
    ensure(dry == 1_200_000, || format!("full-size dry count {dry}"))?;
    let cfg = GenConfig {
        users: 10,
        rate: Duration::from_millis(100),
        test_time: Some(Duration::from_secs(20)),
        ..full.gen_config(42)
    };
    let o = run_config("C-T4-4-desk", Scenario::Streaming, &cfg, &virtual_opts(1)).map_err(|e| e.to_string())?;
    let (gen, done) = (o.report.events_generated, o.report.latency.count);
    ensure(gen == 2000 && done == 2000, || format!("generated {gen}, checked {done}"))?;
    Ok(format!("desk run generated and checked {gen}; full-size dry count {dry}"))
}

fn pass_ratio_fidelity() -> Outcome {
    let mut seen = Vec::new();
    for p in [0u8, 25, 50, 75, 100] {
        let cfg = GenConfig { users: 100, events: 10_000, policies: 5, pass_ratio: Some(p), ..Default::default() };
        let o = run_config("pass", Scenario::Batch, &cfg, &virtual_opts(4)).map_err(|e| e.to_string())?;
        let l = &o.report.latency;
        let want = 100 * p as u64;
        ensure(l.count == 10_000 && l.compliant == want && o.report.label_mismatches == 0, || {
            format!("ratio {p}: {} of {} compliant, {} label mismatches", l.compliant, l.count, o.report.label_mismatches)
        })?;
        seen.push(format!("{p}%={}", l.compliant));
    }
    Ok(format!("verdict counts over 10000 events: {}", seen.join(" ")))
}

fn batch_throughput(checkers: usize) -> Result<(f64, RunOutcome), String> {
    let cfg = GenConfig { users: 100, events: 100_000, ..Default::default() };
    let opts = RunOptions { checkers, partitions: 10, injected_delay: Some(Duration::from_millis(1)), ..Default::default() };
    let o = run_config("C-T5-1", Scenario::Batch, &cfg, &opts).map_err(|e| e.to_string())?;
    ensure(o.report.latency.count == 100_000, || format!("{checkers} checkers produced {} results", o.report.latency.count))?;
    let tp = o.report.latency.throughput_total_eps.ok_or("no throughput")?;
    Ok((tp, o))
}

fn scaling() -> Outcome {
    let mut tps = Vec::new();
    for n in [1, 5, 10] {
        tps.push(batch_throughput(n)?.0);
    }
    let desc = format!("1/5/10 checkers: {:.0}/{:.0}/{:.0} ev/s", tps[0], tps[1], tps[2]);
    ensure(tps[2] >= 4.0 * tps[0], || format!("speed-up below 4x: {desc}"))?;
    ensure(tps[0] <= tps[1] && tps[1] <= tps[2], || format!("throughput decreased: {desc}"))?;
    Ok(format!("{desc}, speed-up {:.1}x", tps[2] / tps[0]))
}

fn verdicts(o: &RunOutcome) -> BTreeMap<String, bool> {
    o.rows.iter().map(|r| (r.event_id.clone(), r.compliant)).collect()
}

fn ceiling() -> Outcome {
    let cfg = GenConfig { users: 200, events: 20_000, ..Default::default() };
    let run = |n: usize| {
        run_config("ceiling", Scenario::Batch, &cfg, &RunOptions { checkers: n, partitions: 10, ..Default::default() })
            .map_err(|e| e.to_string())
    };
    let (ten, eleven) = (run(10)?, run(11)?);
    let idle: Vec<&str> = eleven
        .report
        .checker_stats
        .iter()
        .filter(|c| c.checked == 0 && c.consents == 0)
        .map(|c| c.consumer_id.as_str())
        .collect();
    ensure(idle.len() == 1, || format!("idle checkers with 11 members: {idle:?}"))?;
    ensure(ten.report.checker_stats.iter().all(|c| c.checked > 0), || "a checker idled with 10 members".into())?;
    ensure(verdicts(&ten) == verdicts(&eleven) && ten.rows.len() == 20_000, || "results differ between 10 and 11 checkers".into())?;
    Ok(format!("{} idle of 11; 20000 identical verdicts vs 10 checkers", idle[0]))
}

fn overload_divergence() -> Outcome {
    let overload = GenConfig { users: 10, rate: Duration::from_millis(10), events: 10_000, ..Default::default() };
    let opts = RunOptions { injected_delay: Some(Duration::from_millis(2)), ..virtual_opts(1) };
    let o = run_config("C-T2-4-overload", Scenario::Streaming, &overload, &opts).map_err(|e| e.to_string())?;
    let p95: Vec<f64> = o.report.latency.percentile_series.iter().map(|r| r.p95_ms).collect();
    let mut run = 1;
    let mut best = 1;
    for w in p95.windows(2) {
        run = if w[1] > w[0] { run + 1 } else { 1 };
        best = best.max(run);
    }
    ensure(best >= 5, || format!("longest strictly increasing p95 run {best}: {p95:?}"))?;

    let stable = GenConfig { users: 100, rate: Duration::from_secs(1), events: 10_000, ..Default::default() };
    let opts = RunOptions { injected_delay: Some(Duration::from_micros(500)), ..virtual_opts(10) };
    let s = run_config("C-T4-3-stable", Scenario::Streaming, &stable, &opts).map_err(|e| e.to_string())?;
    let warm = s.report.latency.warmup_events;
    let post: Vec<f64> =
        s.report.latency.percentile_series.iter().filter(|r| r.window_end > warm).map(|r| r.p95_ms).collect();
    let (lo, hi) = post.iter().fold((f64::MAX, 0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    ensure(!post.is_empty() && hi <= 5.0 * lo, || format!("stable p95 range {lo}..{hi} ms"))?;
    Ok(format!(
        "overload p95 rises over {best} windows ({:.0} -> {:.0} ms); stable p95 {lo}..{hi} ms",
        p95[0],
        p95[p95.len() - 1]
    ))
}

fn broker_properties() -> Outcome {
    let mut totals = common::InterleavingStats::default();
    for seed in 0..1000 {
        let s = common::broker_interleaving(seed, 200)?;
        totals.produced += s.produced;
        totals.delivered += s.delivered;
        totals.redelivered += s.redelivered;
        totals.rebalances += s.rebalances;
    }
    Ok(format!(
        "1000 interleavings: {} produced, {} delivered ({} redelivered), {} rebalances",
        totals.produced, totals.delivered, totals.redelivered, totals.rebalances
    ))
}

fn reference_percentile(xs: &[u64], p: u64) -> u64 {
    let mut v = xs.to_vec();
    v.sort();
    *v.iter().find(|&&x| v.iter().filter(|&&y| y <= x).count() as u64 * 100 >= p * v.len() as u64).unwrap()
}

fn percentile_and_recompute() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(95);
    for i in 0..1000 {
        let n = rng.random_range(1..500);
        let xs: Vec<u64> = (0..n).map(|_| rng.random_range(0..1_000_000)).collect();
        let p = rng.random_range(1..=100u64);
        let got = percentile(&xs, p as f64).map_err(|e| e.to_string())?;
        let want = reference_percentile(&xs, p);
        ensure(got == want, || format!("array {i}: p{p} gave {got}, reference {want}"))?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = GenConfig { users: 10, rate: Duration::from_millis(10), events: 5_000, ..Default::default() };
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        injected_delay: Some(Duration::from_millis(2)),
        stats: StatsParams::default(),
        ..virtual_opts(1)
    };
    let o = run_config("overload", Scenario::Streaming, &cfg, &opts).map_err(|e| e.to_string())?;
    let csv = std::fs::read(dir.path().join("latencies.csv")).map_err(|e| e.to_string())?;
    let again = genbench::recompute(&csv[..], opts.stats).map_err(|e| e.to_string())?;
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let same_text = serde_json::to_string(&report["latency"]).unwrap() == serde_json::to_string(&again).unwrap();
    ensure(again == o.report.latency && same_text, || "in-process recompute differs from report.json".into())?;
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/recompute_report.py");
    let py = Command::new("python3")
        .arg(script)
        .arg(dir.path().join("latencies.csv"))
        .arg(dir.path().join("report.json"))
        .output();
    let external = match py {
        Ok(out) if out.status.success() => "script agrees".to_string(),
        Ok(out) => return Err(format!("script mismatch: {}", String::from_utf8_lossy(&out.stdout))),
        Err(_) => "python3 not found, script skipped".to_string(),
    };
    Ok(format!("1000 arrays match the sort reference; report recomputed exactly ({external})"))
}

fn serialization() -> Outcome {
    let t = builtin_special();
    let cfg = GenConfig { users: 100, events: 900, seed: 42, ..Default::default() };
    let consents = gen_consents(&cfg, &t).map_err(|e| e.to_string())?;
    let mut entries = consent_entries(&consents);
    for ev in gen_events(&cfg, &consents, &t).map_err(|e| e.to_string())? {
        entries.push(ev.map_err(|e| e.to_string())?.entry);
    }
    for e in &entries {
        let s = to_json(e);
        let back: LogEntry = from_json(&s).map_err(|e| e.to_string())?;
        ensure(&back == e && to_json(&back) == s, || format!("{} does not round-trip", e.entry_id))?;
    }
    let mut w = TtlWriter::new(t.prefixes().clone());
    entries.iter().for_each(|e| w.entry(e));
    let ttl = w.finish();
    let mut triples = 0;
    for tr in oxttl::TurtleParser::new().for_slice(ttl.as_bytes()) {
        tr.map_err(|e| format!("turtle rejected: {e}"))?;
        triples += 1;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = RunOptions { out_dir: Some(dir.path().to_path_buf()), dump_events: true, ..virtual_opts(2) };
    let run_cfg = GenConfig { users: 50, events: 2_000, ..Default::default() };
    let o = run_config("storage", Scenario::Batch, &run_cfg, &opts).map_err(|e| e.to_string())?;
    let dump = std::fs::read_to_string(dir.path().join("events.jsonl")).map_err(|e| e.to_string())?;
    let mut raw = 0u64;
    for line in dump.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let key = v["dataSubject"].as_str().unwrap_or("");
        raw += line.len() as u64 + key.len() as u64 + 16;
    }
    let expected = raw * 2;
    let got = o.report.storage_bytes.application_log;
    ensure(got == expected, || format!("storage {got} vs recomputed {expected}"))?;
    Ok(format!("{} entries round-trip; {triples} triples parse; storage {got} bytes matches dump", entries.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("reasoner/oracle equivalence", reasoner_oracle_equivalence),
        ("sensor-gathering scenario", listing_scenario),
        ("event-count exactness", event_count_exactness),
        ("pass-ratio fidelity", pass_ratio_fidelity),
        ("batch scaling with checkers", scaling),
        ("partition ceiling", ceiling),
        ("overload divergence and stable regime", overload_divergence),
        ("broker properties", broker_properties),
        ("percentiles and report recompute", percentile_and_recompute),
        ("serialization and storage accounting", serialization),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS {name} [{secs:.1}s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} [{secs:.1}s]: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
