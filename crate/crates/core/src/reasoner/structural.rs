use crate::policy::{Attribute, BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy};
use crate::vocab::{Category, ClassIx, Taxonomy};

use super::ReasonerError;

/// An expression with atoms resolved to taxonomy indices and `Top`
/// rewritten to the category root.
#[derive(Clone, Debug)]
pub(crate) enum Rx {
    Atom(ClassIx),
    Union(Vec<Rx>),
    Inter(Vec<Rx>),
    Empty,
}

pub(crate) fn resolve(e: &ClassExpr, t: &Taxonomy) -> Result<Rx, ReasonerError> {
    Ok(match e {
        ClassExpr::Atom(id) => Rx::Atom(t.lookup(id).ok_or_else(|| ReasonerError::UnknownClass(t.prefixes().compact(id)))?),
        ClassExpr::Top(c) => Rx::Atom(t.root(*c)),
        ClassExpr::Null(_) => Rx::Empty,
        ClassExpr::Union(xs) => Rx::Union(xs.iter().map(|x| resolve(x, t)).collect::<Result<_, _>>()?),
        ClassExpr::Intersection(xs) => Rx::Inter(xs.iter().map(|x| resolve(x, t)).collect::<Result<_, _>>()?),
    })
}

/// Keeps only the maximal classes of `v`, sorted.
fn maximal(mut v: Vec<ClassIx>, t: &Taxonomy) -> Vec<ClassIx> {
    v.sort_unstable();
    v.dedup();
    if v.len() < 2 {
        return v;
    }
    let all = v.clone();
    v.retain(|&x| !all.iter().any(|&y| y != x && t.is_subclass_ix(x, y)));
    v
}

/// Maximal common subclasses of `a` and `b`.
fn glb(a: ClassIx, b: ClassIx, t: &Taxonomy) -> Vec<ClassIx> {
    if t.is_subclass_ix(a, b) {
        return vec![a];
    }
    if t.is_subclass_ix(b, a) {
        return vec![b];
    }
    let mut common = t.descendants(a).clone();
    common.intersect_with(t.descendants(b));
    common
        .ones()
        .filter(|&x| {
            let mut above = t.ancestors(ClassIx::from_usize(x)).clone();
            above.intersect_with(&common);
            above.count_ones(..) == 1
        })
        .map(ClassIx::from_usize)
        .collect()
}

/// Maximal elements of the down-closed set denoted by `rx`. Empty iff the
/// set is empty.
pub(crate) fn generators(rx: &Rx, t: &Taxonomy) -> Vec<ClassIx> {
    match rx {
        Rx::Atom(a) => vec![*a],
        Rx::Empty => Vec::new(),
        Rx::Union(xs) => maximal(xs.iter().flat_map(|x| generators(x, t)).collect(), t),
        Rx::Inter(xs) => {
            let mut acc = generators(&xs[0], t);
            for x in &xs[1..] {
                if acc.is_empty() {
                    break;
                }
                let other = generators(x, t);
                let met = acc.iter().flat_map(|&g| other.iter().flat_map(move |&h| glb(g, h, t))).collect();
                acc = maximal(met, t);
            }
            acc
        }
    }
}

/// Whether class `a` lies in the set denoted by `rx`.
pub(crate) fn member(a: ClassIx, rx: &Rx, t: &Taxonomy) -> bool {
    match rx {
        Rx::Atom(d) => t.is_subclass_ix(a, *d),
        Rx::Union(xs) => xs.iter().any(|x| member(a, x, t)),
        Rx::Inter(xs) => xs.iter().all(|x| member(a, x, t)),
        Rx::Empty => false,
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CompiledDuration {
    Class(ClassIx),
    Interval { min: u64, max: Option<u64> },
}

pub(crate) fn compile_duration(d: &DurationExpr, t: &Taxonomy) -> Result<CompiledDuration, ReasonerError> {
    Ok(match d {
        DurationExpr::Class(id) => {
            let ix = t.lookup(id).ok_or_else(|| ReasonerError::UnknownClass(t.prefixes().compact(id)))?;
            let cat = t.category_of_ix(ix);
            if cat != Category::Duration {
                return Err(ReasonerError::CategoryMismatch { left: Category::Duration, right: cat });
            }
            CompiledDuration::Class(ix)
        }
        DurationExpr::Interval { min_days, max_days } => {
            CompiledDuration::Interval { min: *min_days as u64, max: max_days.map(u64::from) }
        }
    })
}

impl CompiledDuration {
    /// Whether this (policy) duration alone contains `content`.
    pub(crate) fn covers_single(&self, content: &CompiledDuration, t: &Taxonomy) -> bool {
        match (content, self) {
            (CompiledDuration::Class(c), CompiledDuration::Class(p)) => t.is_subclass_ix(*c, *p),
            (CompiledDuration::Interval { min: cmin, max: cmax }, CompiledDuration::Interval { min: pmin, max: pmax }) => {
                cmin >= pmin
                    && match (cmax, pmax) {
                        (_, None) => true,
                        (None, Some(_)) => false,
                        (Some(c), Some(p)) => c <= p,
                    }
            }
            _ => false,
        }
    }

    /// Whether the union of `policies` contains `content`. Returns the
    /// lowest policy index taking part in the cover.
    pub(crate) fn cover<'a>(
        content: &CompiledDuration,
        policies: impl Iterator<Item = (usize, &'a CompiledDuration)>,
        t: &Taxonomy,
    ) -> Option<usize> {
        match *content {
            CompiledDuration::Class(c) => policies
                .filter(|(_, p)| matches!(p, CompiledDuration::Class(pc) if t.is_subclass_ix(c, *pc)))
                .map(|(j, _)| j)
                .min(),
            CompiledDuration::Interval { min: a, max: b } => {
                let mut spans: Vec<(u64, Option<u64>, usize)> = policies
                    .filter_map(|(j, p)| match *p {
                        CompiledDuration::Interval { min, max } => Some((min, max, j)),
                        CompiledDuration::Class(_) => None,
                    })
                    .filter(|&(min, max, _)| b.is_none_or(|b| min <= b) && max.is_none_or(|m| m >= a))
                    .collect();
                spans.sort_unstable();
                // `need` is the smallest day not yet covered; None = all covered.
                let mut need = Some(a);
                let mut first: Option<usize> = None;
                for (min, max, j) in spans {
                    let Some(n) = need else { break };
                    if b.is_some_and(|b| n > b) {
                        break;
                    }
                    if min > n {
                        break;
                    }
                    let next = max.map(|m| m + 1);
                    if next.is_none_or(|next| next > n) {
                        first = Some(first.map_or(j, |f| f.min(j)));
                        need = next;
                    }
                }
                let covered = match (need, b) {
                    (None, _) => true,
                    (Some(n), Some(b)) => n > b,
                    (Some(_), None) => false,
                };
                covered.then(|| first.expect("a covering span was recorded"))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledBasic {
    pub(crate) attrs: [Rx; 5],
    pub(crate) duration: CompiledDuration,
}

pub(crate) fn compile_basic(p: &BasicPolicy, t: &Taxonomy) -> Result<CompiledBasic, ReasonerError> {
    let attrs = [
        resolve(p.attr(Attribute::Data), t)?,
        resolve(p.attr(Attribute::Processing), t)?,
        resolve(p.attr(Attribute::Purpose), t)?,
        resolve(p.attr(Attribute::Recipient), t)?,
        resolve(p.attr(Attribute::Location), t)?,
    ];
    Ok(CompiledBasic { attrs, duration: compile_duration(p.duration(), t)? })
}

/// A consent policy with its class names resolved against one taxonomy, so
/// repeated checks skip the lookups.
#[derive(Clone, Debug)]
pub struct CompiledPolicy {
    pub(crate) basics: Vec<CompiledBasic>,
}

impl CompiledPolicy {
    pub fn compile(p: &GeneralPolicy, t: &Taxonomy) -> Result<Self, ReasonerError> {
        p.validate(t)?;
        Ok(CompiledPolicy { basics: p.basics().iter().map(|b| compile_basic(b, t)).collect::<Result<_, _>>()? })
    }

    pub fn len(&self) -> usize {
        self.basics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basics.is_empty()
    }
}
