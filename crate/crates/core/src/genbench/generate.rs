//! Seeded consent and event corpora. Consents draw from one ChaCha stream,
//! events from another, so the consent set does not depend on how many
//! events are taken.

use chrono::{DateTime, Duration as ChronoDuration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::synth;
use super::{GenConfig, GenError};
use crate::policy::{Attribute, BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy, LogContent, StorageExpr};
use crate::reasoner::CompiledPolicy;
use crate::splog::{EntryKind, LogEntry};
use crate::vocab::{Category, Taxonomy};

/// Attempts at random perturbation before the exhaustive fallback.
const VIOLATION_TRIES: usize = 64;
/// Unbounded consented durations are specialised within this many days.
const DURATION_HORIZON: u32 = 730;

/// Validity time of every generated consent; event `i` is stamped
/// `GEN_EPOCH + schedule_ns(i)`.
pub fn gen_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap()
}

pub fn user_id(u: usize) -> String {
    format!("user{u}")
}

pub fn consent_id(u: usize) -> String {
    format!("consent-{u}")
}

fn event_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn random_atom<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, cat: Category) -> ClassExpr {
    let ix = *t.classes_in(cat).choose(rng).expect("category has a root");
    ClassExpr::Atom(t.class(ix).clone())
}

fn consent_basic<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy) -> BasicPolicy {
    let mut e = |a: Attribute| random_atom(rng, t, a.category());
    let (data, processing, purpose, recipient, location) =
        (e(Attribute::Data), e(Attribute::Processing), e(Attribute::Purpose), e(Attribute::Recipient), e(Attribute::Location));
    let duration = if rng.random_bool(0.5) {
        DurationExpr::at_least(0)
    } else {
        DurationExpr::between(0, rng.random_range(1..=DURATION_HORIZON))
    };
    BasicPolicy { data, processing, purpose, recipient, storage: StorageExpr { location, duration } }
}

/// One consent per user, `1..=cfg.policies` atomic basics each.
pub fn gen_consents(cfg: &GenConfig, t: &Taxonomy) -> Result<Vec<(String, GeneralPolicy)>, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.users)
        .map(|u| {
            let n = rng.random_range(1..=cfg.policies);
            let basics = (0..n).map(|_| consent_basic(&mut rng, t)).collect();
            (user_id(u), GeneralPolicy::new(basics).expect("non-empty"))
        })
        .collect())
}

/// Consents as log entries, in user order.
pub fn consent_entries(consents: &[(String, GeneralPolicy)]) -> Vec<LogEntry> {
    let at = gen_epoch() - ChronoDuration::seconds(1);
    consents
        .iter()
        .enumerate()
        .map(|(u, (user, p))| LogEntry::consent(consent_id(u), user.clone(), at, p.clone()))
        .collect()
}

/// A generated event with the verdict it was built to receive.
#[derive(Clone, Debug)]
pub struct LabeledEvent {
    pub index: u64,
    pub user: usize,
    pub scheduled_ns: u64,
    pub expected_compliant: bool,
    pub entry: LogEntry,
}

/// Deterministic labelling for a fixed ratio: event `i` is compliant iff
/// the running quota `floor(i * p / 100)` steps up at `i`. Any prefix of
/// length n has exactly `floor(n * p / 100)` compliant events.
pub fn fixed_ratio_label(i: u64, p: u8) -> bool {
    let p = p as u128;
    let i = i as u128;
    (i + 1) * p / 100 > i * p / 100
}

/// Lazy event stream, see [`gen_events`].
pub struct EventStream<'a> {
    cfg: GenConfig,
    t: &'a Taxonomy,
    consents: &'a [(String, GeneralPolicy)],
    compiled: Vec<CompiledPolicy>,
    rng: ChaCha8Rng,
    next: u64,
    count: Option<u64>,
}

/// Events round-robin over users. Each carries the label it was generated
/// for, and every label is confirmed against the reasoner before the event
/// is yielded.
pub fn gen_events<'a>(
    cfg: &GenConfig,
    consents: &'a [(String, GeneralPolicy)],
    t: &'a Taxonomy,
) -> Result<EventStream<'a>, GenError> {
    cfg.validate()?;
    if consents.len() < cfg.users {
        return Err(GenError::Config(format!("{} consents for {} users", consents.len(), cfg.users)));
    }
    let compiled = consents
        .iter()
        .map(|(_, p)| CompiledPolicy::compile(p, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| GenError::Config(format!("consent: {e}")))?;
    Ok(EventStream { cfg: cfg.clone(), t, consents, compiled, rng: event_rng(cfg.seed), next: 0, count: cfg.event_count() })
}

fn point_duration<R: Rng + ?Sized>(rng: &mut R, d: &DurationExpr) -> DurationExpr {
    match d {
        DurationExpr::Interval { min_days, max_days } => {
            let hi = max_days.unwrap_or(min_days.saturating_add(DURATION_HORIZON));
            DurationExpr::days(rng.random_range(*min_days..=hi))
        }
        DurationExpr::Class(_) => d.clone(),
    }
}

/// A subset of `b`: every named class replaced by a random subclass, the
/// duration narrowed to a single day count.
fn specialise_point<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, b: &BasicPolicy) -> LogContent {
    let mut c = synth::specialise(rng, t, b);
    c.storage.duration = point_duration(rng, b.duration());
    c
}

/// Slots 0..5 are the class attributes, slot 5 the duration.
const SLOTS: usize = 6;

fn perturb<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, c: &mut LogContent, slot: usize) {
    match Attribute::ALL.get(slot) {
        Some(a) => *c.attr_mut(*a) = random_atom(rng, t, a.category()),
        None => c.storage.duration = DurationExpr::days(rng.random_range(0..=2 * DURATION_HORIZON)),
    }
}

impl EventStream<'_> {
    pub fn total(&self) -> Option<u64> {
        self.count
    }

    fn complies(&self, user: usize, c: &LogContent) -> Result<bool, GenError> {
        self.compiled[user]
            .check(c, self.t)
            .map(|r| r.compliant)
            .map_err(|e| GenError::Config(format!("generated content: {e}")))
    }

    fn compliant_content(&mut self, user: usize) -> Result<LogContent, GenError> {
        let b = self.consents[user].1.basics().choose(&mut self.rng).expect("non-empty").clone();
        let c = specialise_point(&mut self.rng, self.t, &b);
        if !self.complies(user, &c)? {
            return Err(GenError::GenerationStuck { user: user_id(user), index: self.next });
        }
        Ok(c)
    }

    fn violating_content(&mut self, user: usize) -> Result<LogContent, GenError> {
        let basics = self.consents[user].1.basics().to_vec();
        for _ in 0..VIOLATION_TRIES {
            let b = basics.choose(&mut self.rng).expect("non-empty");
            let mut c = specialise_point(&mut self.rng, self.t, b);
            let k = self.rng.random_range(1..=2);
            for slot in rand::seq::index::sample(&mut self.rng, SLOTS, k) {
                perturb(&mut self.rng, self.t, &mut c, slot);
            }
            if !self.complies(user, &c)? {
                return Ok(c);
            }
        }
        // Exhaustive single-slot scan from one specialisation; fails only
        // when every slot of the consent is saturated.
        let base = specialise_point(&mut self.rng, self.t, &basics[0]);
        for a in Attribute::ALL {
            for &ix in self.t.classes_in(a.category()) {
                let mut c = base.clone();
                *c.attr_mut(a) = ClassExpr::Atom(self.t.class(ix).clone());
                if !self.complies(user, &c)? {
                    return Ok(c);
                }
            }
        }
        let mut beyond: Vec<u32> = basics
            .iter()
            .filter_map(|b| match b.duration() {
                DurationExpr::Interval { max_days: Some(m), .. } => Some(m.saturating_add(1)),
                _ => None,
            })
            .collect();
        beyond.sort_unstable();
        for d in beyond {
            let mut c = base.clone();
            c.storage.duration = DurationExpr::days(d);
            if !self.complies(user, &c)? {
                return Ok(c);
            }
        }
        Err(GenError::GenerationStuck { user: user_id(user), index: self.next })
    }

    fn make(&mut self) -> Result<LabeledEvent, GenError> {
        let i = self.next;
        let user = (i % self.cfg.users as u64) as usize;
        let label = match self.cfg.pass_ratio {
            Some(p) => fixed_ratio_label(i, p),
            None => self.rng.random_bool(0.5),
        };
        let content = if label { self.compliant_content(user)? } else { self.violating_content(user)? };
        let kind = if self.rng.random_bool(0.2) { EntryKind::SharingEvent } else { EntryKind::ProcessingEvent };
        let scheduled_ns = self.cfg.schedule_ns(i);
        let at = gen_epoch() + ChronoDuration::nanoseconds(scheduled_ns as i64);
        let entry = LogEntry::event(format!("ev{i}"), kind, self.consents[user].0.clone(), at, content);
        Ok(LabeledEvent { index: i, user, scheduled_ns, expected_compliant: label, entry })
    }
}

impl Iterator for EventStream<'_> {
    type Item = Result<LabeledEvent, GenError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.count.is_some_and(|n| self.next >= n) {
            return None;
        }
        let ev = self.make();
        self.next += 1;
        if ev.is_err() {
            // A stuck generator stays stuck; end the stream after reporting.
            self.count = Some(self.next);
        }
        Some(ev)
    }
}
