//! `polcheck`: corpus generation, benchmark runs, single compliance checks,
//! broker inspection and report recomputation.
//!
//! Exit status: 0 on success, 1 when flags or inputs are invalid (or a
//! recomputed report disagrees), 2 when the run itself fails.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polcheck_core::broker::{Broker, VirtualClock};
use polcheck_core::genbench::{
    self, consent_entries, gen_consents, gen_epoch, gen_events, lookup_task, parse_duration, run_task, Format, GenConfig,
    GenError, GenType, RunOptions, StatsParams,
};
use polcheck_core::policy::{GeneralPolicy, LogContent, PolicyError};
use polcheck_core::reasoner::{complies, oracle_complies, ReasonerError, DEFAULT_MAX_UNIVERSE};
use polcheck_core::splog::{JsonCodec, LogEntry, SplogError, TtlWriter};
use polcheck_core::vocab::{builtin_special, extend_taxonomy, Taxonomy, VocabError};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "polcheck", version, about = "Usage-policy compliance checking and benchmarking")]
struct Cli {
    /// Print progress to standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded consent or event corpus.
    Gen(GenArgs),
    /// Benchmark tasks.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Compliance checks.
    Reason {
        #[command(subcommand)]
        command: ReasonCommand,
    },
    /// Partitioned-log utilities.
    Broker {
        #[command(subcommand)]
        command: BrokerCommand,
    },
    /// Benchmark report utilities.
    Report {
        #[command(subcommand)]
        command: ReportCommand,
    },
}

#[derive(Args, Debug)]
struct TaxonomyArgs {
    /// Taxonomy extension file layered over the built-in vocabulary
    /// (repeatable, applied in order).
    #[arg(long = "taxonomy", value_name = "FILE")]
    taxonomy: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Interval between two events of the same user, as <int><unit> terms
    /// (ns, us, ms, s, m, h), e.g. 1s or 10ms.
    #[arg(long, default_value = "1s", value_parser = duration_arg)]
    rate: Duration,
    /// Total events; 0 or less derives the count from --test-time, or
    /// streams forever without it.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    events: i64,
    /// Output serialization.
    #[arg(long, default_value = "json", value_parser = ["json", "ttl"])]
    format: String,
    /// `log` for processing and sharing events, `consent` for consents.
    #[arg(long = "type", default_value = "log", value_parser = ["log", "consent"])]
    kind: String,
    /// Maximum number of basic policies in one consent.
    #[arg(long, default_value_t = 5)]
    policies: usize,
    /// Number of distinct data subjects.
    #[arg(long, default_value_t = 1000)]
    users: usize,
    /// Percentage of compliant events (0-100), or `random` for a fair coin
    /// per event.
    #[arg(long, default_value = "random", value_parser = pass_ratio_arg)]
    pass_ratio: PassRatio,
    /// Random seed.
    #[arg(long, env = "STC_SEED", default_value_t = 42)]
    seed: u64,
    /// Length of the simulated run; with --rate and --users fixes the event
    /// count.
    #[arg(long, value_parser = duration_arg)]
    test_time: Option<Duration>,
    /// Output file; standard output when absent.
    #[arg(long, short, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// Directory receiving `consents.<ext>` or `events.<ext>`.
    #[arg(long, env = "STC_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    taxonomy: TaxonomyArgs,
}

#[derive(Clone, Copy, Debug)]
struct PassRatio(Option<u8>);

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Run one benchmark task and write report.json, latencies.csv,
    /// series.csv and throughput.csv.
    Run(BenchArgs),
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Task id such as C-T4-4, optionally with an @scaleK suffix.
    #[arg(long)]
    task: String,
    /// Divide users and run length by this factor (same as @scaleK).
    #[arg(long)]
    scale: Option<u64>,
    /// Concurrent compliance checkers.
    #[arg(long, default_value_t = 1)]
    checkers: usize,
    /// Partitions of the application log.
    #[arg(long, default_value_t = 10)]
    partitions: usize,
    /// Copies of each record counted in storage figures.
    #[arg(long, default_value_t = 2)]
    replication_factor: u32,
    /// Simulate time instead of running against the wall clock.
    #[arg(long)]
    virtual_time: bool,
    /// Extra time per check, e.g. 1ms.
    #[arg(long, value_parser = duration_arg)]
    inject_delay: Option<Duration>,
    /// Random seed.
    #[arg(long, env = "STC_SEED", default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "STC_OUT_DIR", default_value = "bench-out")]
    out_dir: PathBuf,
    /// Events per percentile window.
    #[arg(long, default_value_t = 1000)]
    window: usize,
    /// Percentiles over growing prefixes instead of disjoint windows.
    #[arg(long)]
    cumulative: bool,
    /// Percentage of earliest results treated as warm-up.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u8).range(0..=100))]
    warmup_pct: u8,
    /// Also write every application-log record to events.jsonl.
    #[arg(long)]
    dump_events: bool,
    /// Sample process CPU and memory at this interval (real time only).
    #[arg(long, value_parser = duration_arg)]
    sample_resources: Option<Duration>,
    /// Print the number of events the task would generate and stop.
    #[arg(long)]
    dry_count: bool,
    #[command(flatten)]
    taxonomy: TaxonomyArgs,
}

#[derive(Subcommand, Debug)]
enum ReasonCommand {
    /// Check one event content against one consent.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// JSON event entry, or bare usage content.
    #[arg(long)]
    content: PathBuf,
    /// JSON consent entry, or a bare policy (object or array of basics).
    #[arg(long)]
    consent: PathBuf,
    /// Also decide with the brute-force oracle and require agreement.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    taxonomy: TaxonomyArgs,
}

#[derive(Subcommand, Debug)]
enum BrokerCommand {
    /// Load a record dump into a fresh broker and print its layout.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
struct InspectArgs {
    /// JSON-lines record dump (events.jsonl from `bench run --dump-events`
    /// or `gen` output).
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    partitions: usize,
    #[arg(long, default_value_t = 2)]
    replication_factor: u32,
    /// Consumers to join to the checker group before printing.
    #[arg(long, default_value_t = 0)]
    consumers: usize,
}

#[derive(Subcommand, Debug)]
enum ReportCommand {
    /// Recompute latency statistics from latencies.csv.
    Recompute(RecomputeArgs),
}

#[derive(Args, Debug)]
struct RecomputeArgs {
    /// The latencies.csv of a run.
    #[arg(long = "from")]
    from: PathBuf,
    /// Compare with this report.json, taking window and warm-up settings
    /// from it; exit 1 on any difference.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    window: usize,
    #[arg(long)]
    cumulative: bool,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u8).range(0..=100))]
    warmup_pct: u8,
}

/// Marks an error as caused by invalid flags or input.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// Prints a line to standard output; a closed pipe is not an error.
macro_rules! say {
    ($($t:tt)*) => {
        print_line(&format!($($t)*))?
    };
}

fn print_line(s: &str) -> io::Result<()> {
    match writeln!(io::stdout().lock(), "{s}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn duration_arg(s: &str) -> Result<Duration, String> {
    parse_duration(s).map_err(|e| e.to_string())
}

fn pass_ratio_arg(s: &str) -> Result<PassRatio, String> {
    if s.eq_ignore_ascii_case("random") {
        return Ok(PassRatio(None));
    }
    match s.trim_end_matches('%').parse::<u8>() {
        Ok(p) if p <= 100 => Ok(PassRatio(Some(p))),
        _ => Err(format!("expected 0-100 or `random`, got {s:?}")),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>()
            || cause.is::<SplogError>()
            || cause.is::<VocabError>()
            || cause.is::<PolicyError>()
            || cause.is::<serde_json::Error>()
        {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<ReasonerError>() {
            return if matches!(e, ReasonerError::UniverseTooLarge { .. }) { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<GenError>() {
            return match e {
                GenError::BadDuration(_) | GenError::Config(_) | GenError::UnknownTask(_) | GenError::Csv { .. } => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Gen(a) => gen(a, verbose),
        Command::Bench { command: BenchCommand::Run(a) } => bench(a, verbose),
        Command::Reason { command: ReasonCommand::Check(a) } => check(a),
        Command::Broker { command: BrokerCommand::Inspect(a) } => inspect(a),
        Command::Report { command: ReportCommand::Recompute(a) } => recompute(a),
    }
}

fn load_taxonomy(args: &TaxonomyArgs) -> Result<Taxonomy> {
    let mut t = builtin_special();
    for path in &args.taxonomy {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        t = extend_taxonomy(&t, &text).with_context(|| format!("taxonomy {}", path.display()))?;
    }
    Ok(t)
}

fn gen(a: GenArgs, verbose: u8) -> Result<u8> {
    let format: Format = a.format.parse()?;
    let kind: GenType = a.kind.parse()?;
    let cfg = GenConfig {
        rate: a.rate,
        events: a.events,
        format,
        kind,
        policies: a.policies,
        users: a.users,
        pass_ratio: a.pass_ratio.0,
        seed: a.seed,
        test_time: a.test_time,
    };
    cfg.validate()?;
    let t = load_taxonomy(&a.taxonomy)?;
    let ext = match format {
        Format::Json => "jsonl",
        Format::Ttl => "ttl",
    };
    let path = match (&a.out, &a.out_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let stem = if kind == GenType::Consent { "consents" } else { "events" };
            Some(dir.join(format!("{stem}.{ext}")))
        }
        (None, None) => None,
    };
    let sink: Box<dyn Write> = match &path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    let consents = gen_consents(&cfg, &t)?;
    let codec = JsonCodec::new(t.prefixes().clone());
    let mut ttl = (format == Format::Ttl).then(|| TtlWriter::new(t.prefixes().clone()));
    let mut emit = |e: &LogEntry, w: &mut BufWriter<Box<dyn Write>>| -> io::Result<()> {
        match &mut ttl {
            Some(tw) => {
                tw.entry(e);
                w.write_all(tw.drain().as_bytes())
            }
            None => writeln!(w, "{}", codec.to_json(e)),
        }
    };
    let mut n = 0u64;
    let written = (|| -> Result<()> {
        match kind {
            GenType::Consent => {
                for e in consent_entries(&consents) {
                    emit(&e, &mut w)?;
                    n += 1;
                }
            }
            GenType::Log => {
                for ev in gen_events(&cfg, &consents, &t)? {
                    emit(&ev?.entry, &mut w)?;
                    n += 1;
                }
            }
        }
        w.flush()?;
        Ok(())
    })();
    match written {
        // A closed pipe ends an unbounded stream normally.
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) => {}
        other => other?,
    }
    if verbose > 0 {
        eprintln!("wrote {n} entries{}", path.map(|p| format!(" to {}", p.display())).unwrap_or_default());
    }
    Ok(0)
}

fn bench(a: BenchArgs, verbose: u8) -> Result<u8> {
    if a.scale.is_some() && a.task.contains('@') {
        return Err(invalid("--scale conflicts with an @scale suffix in --task"));
    }
    if a.scale == Some(0) {
        return Err(invalid("--scale must be at least 1"));
    }
    if a.window == 0 {
        return Err(invalid("--window must be at least 1"));
    }
    let mut spec = lookup_task(&a.task)?;
    if let Some(k) = a.scale {
        spec = spec.scaled(k);
    }
    if a.dry_count {
        say!("{}", spec.event_count());
        return Ok(0);
    }
    let t = load_taxonomy(&a.taxonomy)?;
    let opts = RunOptions {
        checkers: a.checkers,
        partitions: a.partitions,
        replication_factor: a.replication_factor,
        injected_delay: a.inject_delay,
        virtual_time: a.virtual_time,
        seed: a.seed,
        stats: StatsParams { window: a.window, cumulative: a.cumulative, warmup_pct: a.warmup_pct },
        out_dir: Some(a.out_dir.clone()),
        dump_events: a.dump_events,
        sample_resources: a.sample_resources,
        taxonomy: Some(Arc::new(t)),
    };
    if verbose > 0 {
        eprintln!("running {} ({} events) with {} checker(s)", spec.task_id, spec.event_count(), a.checkers);
    }
    let o = run_task(&spec, &opts)?;
    let l = &o.report.latency;
    let summary = serde_json::json!({
        "task": o.report.task_id,
        "events": l.count,
        "compliant": l.compliant,
        "labelMismatches": o.report.label_mismatches,
        "medianMs": l.median_ms,
        "p95Ms": l.p95_ms,
        "throughputEps": l.throughput_total_eps,
        "outDir": a.out_dir.display().to_string(),
    });
    say!("{summary}");
    Ok(0)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_content(path: &Path, codec: &JsonCodec) -> Result<LogContent> {
    let v = read_json(path)?;
    let content = if v.get("kind").is_some() {
        let e: LogEntry = codec.from_json(&v.to_string()).with_context(|| path.display().to_string())?;
        e.usage().cloned().ok_or_else(|| invalid(format!("{}: entry carries no event content", path.display())))?
    } else {
        codec.usage_from_value(&v).with_context(|| path.display().to_string())?
    };
    Ok(content)
}

fn read_consent(path: &Path, codec: &JsonCodec) -> Result<GeneralPolicy> {
    let v = read_json(path)?;
    if v.get("kind").is_some() {
        let e: LogEntry = codec.from_json(&v.to_string()).with_context(|| path.display().to_string())?;
        e.policy().cloned().ok_or_else(|| invalid(format!("{}: entry carries no consent policy", path.display())))
    } else {
        Ok(codec.policy_from_value(&v).with_context(|| path.display().to_string())?)
    }
}

fn check(a: CheckArgs) -> Result<u8> {
    let t = load_taxonomy(&a.taxonomy)?;
    let codec = JsonCodec::new(t.prefixes().clone());
    let content = read_content(&a.content, &codec)?;
    let consent = read_consent(&a.consent, &codec)?;
    let r = complies(&content, &consent, &t)?;
    if r.compliant {
        say!("compliant");
    } else {
        say!("non-compliant ({})", r.reason.as_str());
    }
    match r.matched_basic {
        Some(i) => say!("matched basic: {i}"),
        None => say!("matched basic: none"),
    }
    if a.oracle {
        let o = oracle_complies(&content, &consent, &t, DEFAULT_MAX_UNIVERSE)?;
        say!("oracle: {}", if o { "compliant" } else { "non-compliant" });
        if o != r.compliant {
            bail!("reasoner and oracle disagree");
        }
    }
    Ok(0)
}

fn inspect(a: InspectArgs) -> Result<u8> {
    let broker = Broker::new();
    broker.create_topic(genbench::APP_TOPIC, a.partitions, a.replication_factor).map_err(|e| invalid(e.to_string()))?;
    let clock = VirtualClock::new(gen_epoch());
    if let Some(path) = &a.events {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        for (i, line) in io::BufRead::lines(BufReader::new(f)).enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Value =
                serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?;
            let key = v.get("dataSubject").and_then(Value::as_str).unwrap_or_default();
            broker.produce(genbench::APP_TOPIC, key.as_bytes(), line.as_bytes(), &clock)?;
        }
    }
    let group = broker.group(genbench::CHECKER_GROUP, genbench::APP_TOPIC)?;
    for i in 0..a.consumers {
        group.join(&format!("checker-{i}"))?;
    }
    say!("{}", serde_json::to_string_pretty(&broker.inspect())?);
    Ok(0)
}

fn recompute(a: RecomputeArgs) -> Result<u8> {
    let expected = match &a.report {
        Some(p) => Some(read_json(p)?.get("latency").cloned().ok_or_else(|| invalid("report has no latency section"))?),
        None => None,
    };
    let params = match &expected {
        Some(l) => {
            let num = |k: &str| l.get(k).and_then(Value::as_u64).ok_or_else(|| invalid(format!("report lacks latency.{k}")));
            StatsParams {
                window: num("window")? as usize,
                cumulative: l.get("cumulative").and_then(Value::as_bool).unwrap_or(false),
                warmup_pct: num("warmup_pct")? as u8,
            }
        }
        None => StatsParams { window: a.window, cumulative: a.cumulative, warmup_pct: a.warmup_pct },
    };
    if params.window == 0 {
        return Err(invalid("window must be at least 1"));
    }
    let f = File::open(&a.from).with_context(|| format!("opening {}", a.from.display()))?;
    let stats = genbench::recompute(BufReader::new(f), params)?;
    let got = serde_json::to_value(&stats)?;
    say!("{}", serde_json::to_string_pretty(&got)?);
    if let Some(want) = expected {
        if want != got {
            let keys: Vec<&String> = match (want.as_object(), got.as_object()) {
                (Some(w), Some(g)) => w.keys().filter(|k| w.get(*k) != g.get(*k)).collect(),
                _ => Vec::new(),
            };
            eprintln!("recomputed statistics differ from the report: {keys:?}");
            return Ok(1);
        }
        eprintln!("recomputed statistics match the report");
    }
    Ok(0)
}
