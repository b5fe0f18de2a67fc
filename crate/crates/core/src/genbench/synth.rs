//! Random taxonomies, expressions and policies for property tests and for
//! seeding benchmark corpora. Everything is a pure function of the RNG.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::policy::{Attribute, BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy, StorageExpr};
use crate::vocab::{Category, ClassId, ClassIx, Taxonomy, TaxonomyBuilder};

pub const SYNTH_NS: &str = "http://example.org/synth#";

/// Six roots plus up to `max_classes - 6` random classes. Each new class
/// gets one or two parents drawn from earlier classes of its category, so
/// multiple inheritance is common.
pub fn taxonomy<R: Rng + ?Sized>(rng: &mut R, max_classes: usize) -> Taxonomy {
    let extra = max_classes.saturating_sub(6);
    let n = if extra == 0 { 0 } else { rng.random_range(extra / 2..=extra) };
    let mut b = TaxonomyBuilder::roots_only();
    let mut pools: Vec<Vec<ClassId>> = Category::ALL.iter().map(|c| vec![c.root()]).collect();
    for i in 0..n {
        let cat = rng.random_range(0..pools.len());
        let id = ClassId::new(format!("{SYNTH_NS}c{i}"));
        let parents = rng.random_range(1..=2usize).min(pools[cat].len());
        for p in pools[cat].choose_multiple(rng, parents).cloned().collect::<Vec<_>>() {
            b.subclass(id.clone(), p);
        }
        pools[cat].push(id);
    }
    b.build().expect("random DAG is well formed")
}

fn pick<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, cat: Category) -> ClassIx {
    *t.classes_in(cat).choose(rng).expect("category has a root")
}

/// A random class expression of category `cat`, at most `depth` operators
/// deep.
pub fn expr<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, cat: Category, depth: u32) -> ClassExpr {
    let roll = rng.random_range(0..100u32);
    match roll {
        0..=5 => ClassExpr::Top(cat),
        6..=11 => ClassExpr::Null(cat),
        12..=59 => ClassExpr::Atom(t.class(pick(rng, t, cat)).clone()),
        _ if depth == 0 => ClassExpr::Atom(t.class(pick(rng, t, cat)).clone()),
        _ => {
            let k = rng.random_range(2..=3);
            let members = (0..k).map(|_| expr(rng, t, cat, depth - 1)).collect();
            if roll < 80 {
                ClassExpr::Union(members)
            } else {
                ClassExpr::Intersection(members)
            }
        }
    }
}

/// A random duration: usually a small interval, sometimes a duration class.
pub fn duration<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy) -> DurationExpr {
    if rng.random_bool(0.15) {
        return DurationExpr::Class(t.class(pick(rng, t, Category::Duration)).clone());
    }
    let min = rng.random_range(0..10u32);
    if rng.random_bool(0.3) {
        DurationExpr::at_least(min)
    } else {
        DurationExpr::between(min, min + rng.random_range(0..10u32))
    }
}

pub fn basic<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, depth: u32) -> BasicPolicy {
    let mut e = |a: Attribute| expr(rng, t, a.category(), depth);
    let (data, processing, purpose, recipient, location) =
        (e(Attribute::Data), e(Attribute::Processing), e(Attribute::Purpose), e(Attribute::Recipient), e(Attribute::Location));
    BasicPolicy { data, processing, purpose, recipient, storage: StorageExpr { location, duration: duration(rng, t) } }
}

/// A union-free basic policy made of atoms only.
pub fn atomic_basic<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy) -> BasicPolicy {
    basic(rng, t, 0)
}

pub fn general<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, max_basics: usize, depth: u32) -> GeneralPolicy {
    let n = rng.random_range(1..=max_basics.max(1));
    GeneralPolicy::new((0..n).map(|_| basic(rng, t, depth)).collect()).expect("non-empty")
}

/// A uniformly chosen reflexive subclass of `ix`.
pub fn descendant<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, ix: ClassIx) -> ClassIx {
    let below: Vec<usize> = t.descendants(ix).ones().collect();
    ClassIx::from_usize(*below.choose(rng).expect("reflexive"))
}

/// Replaces every atom (and `Top`) with a random subclass and narrows the
/// duration, so the result denotes a subset of `p`.
pub fn specialise<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, p: &BasicPolicy) -> BasicPolicy {
    fn go<R: Rng + ?Sized>(rng: &mut R, t: &Taxonomy, e: &ClassExpr) -> ClassExpr {
        match e {
            ClassExpr::Atom(id) => match t.lookup(id) {
                Some(ix) => ClassExpr::Atom(t.class(descendant(rng, t, ix)).clone()),
                None => e.clone(),
            },
            ClassExpr::Top(c) => ClassExpr::Atom(t.class(descendant(rng, t, t.root(*c))).clone()),
            ClassExpr::Null(_) => e.clone(),
            ClassExpr::Union(xs) => ClassExpr::Union(xs.iter().map(|x| go(rng, t, x)).collect()),
            // Specialising conjuncts independently could leave an empty
            // meet; keep intersections as they are.
            ClassExpr::Intersection(_) => e.clone(),
        }
    }
    let mut out = p.clone();
    for a in Attribute::ALL {
        *out.attr_mut(a) = go(rng, t, p.attr(a));
    }
    out.storage.duration = match p.duration() {
        DurationExpr::Class(id) => match t.lookup(id) {
            Some(ix) => DurationExpr::Class(t.class(descendant(rng, t, ix)).clone()),
            None => p.duration().clone(),
        },
        DurationExpr::Interval { min_days, max_days } => {
            let hi = max_days.unwrap_or(min_days.saturating_add(730));
            let lo = rng.random_range(*min_days..=hi);
            DurationExpr::between(lo, rng.random_range(lo..=hi))
        }
    };
    out
}
