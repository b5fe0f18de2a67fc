//! Brute-force compliance by enumerating every authorisation tuple the
//! content denotes. Class sets come from [`Taxonomy::extension_of`], which
//! walks child edges and shares no code with the closure bitsets.

use std::collections::BTreeSet;

use crate::policy::{Attribute, ClassExpr, DurationExpr, GeneralPolicy, LogContent};
use crate::vocab::{ClassId, Taxonomy};

use super::ReasonerError;

pub const DEFAULT_MAX_UNIVERSE: usize = 1_000_000;

fn ext(e: &ClassExpr, t: &Taxonomy) -> Result<BTreeSet<ClassId>, ReasonerError> {
    let unknown = |id: &ClassId| ReasonerError::UnknownClass(t.prefixes().compact(id));
    Ok(match e {
        ClassExpr::Atom(id) => t.extension_of(id).map_err(|_| unknown(id))?,
        ClassExpr::Top(c) => t.extension_of(&c.root()).map_err(|_| unknown(&c.root()))?,
        ClassExpr::Null(_) => BTreeSet::new(),
        ClassExpr::Union(xs) => {
            let mut out = BTreeSet::new();
            for x in xs {
                out.extend(ext(x, t)?);
            }
            out
        }
        ClassExpr::Intersection(xs) => {
            let mut out = ext(&xs[0], t)?;
            for x in &xs[1..] {
                let other = ext(x, t)?;
                out.retain(|c| other.contains(c));
            }
            out
        }
    })
}

/// One storage-duration value. `Unbounded` stands for every day beyond all
/// finite sample points.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum DurPoint {
    Day(u64),
    Unbounded,
    Class(ClassId),
}

fn dur_points(d: &DurationExpr, samples: &BTreeSet<u64>, t: &Taxonomy) -> Result<Vec<DurPoint>, ReasonerError> {
    Ok(match d {
        DurationExpr::Class(id) => t
            .extension_of(id)
            .map_err(|_| ReasonerError::UnknownClass(t.prefixes().compact(id)))?
            .into_iter()
            .map(DurPoint::Class)
            .collect(),
        DurationExpr::Interval { min_days, max_days } => {
            let lo = *min_days as u64;
            let hi = max_days.map(u64::from);
            let mut v: Vec<DurPoint> =
                samples.iter().filter(|&&d| d >= lo && hi.is_none_or(|h| d <= h)).map(|&d| DurPoint::Day(d)).collect();
            if hi.is_none() {
                v.push(DurPoint::Unbounded);
            }
            v
        }
    })
}

fn dur_contains(d: &DurationExpr, p: &DurPoint, t: &Taxonomy) -> bool {
    match (d, p) {
        (DurationExpr::Interval { min_days, max_days }, DurPoint::Day(x)) => {
            *x >= *min_days as u64 && max_days.is_none_or(|m| *x <= m as u64)
        }
        (DurationExpr::Interval { max_days, .. }, DurPoint::Unbounded) => max_days.is_none(),
        (DurationExpr::Class(id), DurPoint::Class(c)) => t.extension_of(id).is_ok_and(|s| s.contains(c)),
        _ => false,
    }
}

/// Whether every tuple denoted by `c` is denoted by some basic of
/// `consent`. Fails with [`ReasonerError::UniverseTooLarge`] when `c`
/// denotes more than `max_universe` tuples.
pub fn oracle_complies(
    c: &LogContent,
    consent: &GeneralPolicy,
    t: &Taxonomy,
    max_universe: usize,
) -> Result<bool, ReasonerError> {
    let mut samples = BTreeSet::from([0u64]);
    for d in std::iter::once(c.duration()).chain(consent.basics().iter().map(|b| b.duration())) {
        if let DurationExpr::Interval { min_days, max_days } = d {
            for e in std::iter::once(*min_days as u64).chain(max_days.map(u64::from)) {
                samples.extend([e.saturating_sub(1), e, e + 1]);
            }
        }
    }
    let content: Vec<Vec<ClassId>> =
        Attribute::ALL.iter().map(|&a| ext(c.attr(a), t).map(|s| s.into_iter().collect())).collect::<Result<_, _>>()?;
    let durs = dur_points(c.duration(), &samples, t)?;
    let size = content.iter().map(|s| s.len() as u128).product::<u128>() * durs.len() as u128;
    if size > max_universe as u128 {
        return Err(ReasonerError::UniverseTooLarge { size, limit: max_universe });
    }
    if size == 0 {
        return Ok(true);
    }
    let policy: Vec<[BTreeSet<ClassId>; 5]> = consent
        .basics()
        .iter()
        .map(|b| {
            Ok([
                ext(b.attr(Attribute::Data), t)?,
                ext(b.attr(Attribute::Processing), t)?,
                ext(b.attr(Attribute::Purpose), t)?,
                ext(b.attr(Attribute::Recipient), t)?,
                ext(b.attr(Attribute::Location), t)?,
            ])
        })
        .collect::<Result<_, ReasonerError>>()?;
    let mut ix = [0usize; 5];
    loop {
        for d in &durs {
            let covered = consent.basics().iter().zip(&policy).any(|(b, sets)| {
                (0..5).all(|k| sets[k].contains(&content[k][ix[k]])) && dur_contains(b.duration(), d, t)
            });
            if !covered {
                return Ok(false);
            }
        }
        let mut k = 0;
        while k < 5 {
            ix[k] += 1;
            if ix[k] < content[k].len() {
                break;
            }
            ix[k] = 0;
            k += 1;
        }
        if k == 5 {
            return Ok(true);
        }
    }
}
