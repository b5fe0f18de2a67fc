//! Compliance of log-entry content against consent policies.
//!
//! A policy denotes a set of authorisations and content complies when its
//! own authorisation set is included in the policy's. Under the canonical
//! interpretation every class denotes the set of its subclasses, so every
//! expression denotes a down-closed set of classes. Such a set is fully
//! described by its maximal elements ("generators"), which lets the
//! structural procedure here decide inclusion without materialising sets:
//!
//! * `c ⊑ d` iff every generator of `c` is a member of `d`;
//! * membership of a single class in `d` is evaluated bottom-up
//!   (atom: subclass test, union: any, intersection: all);
//! * the generators of an intersection are the maximal common subclasses
//!   of its members' generators.
//!
//! [`oracle_complies`] answers the same question by brute-force tuple
//! enumeration and is what the structural procedure is tested against.

mod oracle;
mod structural;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{dnf, Attribute, BasicPolicy, ClassExpr, DurationExpr, GeneralPolicy, LogContent, PolicyError};
use crate::vocab::{Category, Taxonomy};

pub use oracle::{oracle_complies, DEFAULT_MAX_UNIVERSE};
pub use structural::CompiledPolicy;

use structural::{compile_basic, compile_duration, generators, member, resolve, CompiledDuration};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReasonerError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("category mismatch: {left} vs {right}")]
    CategoryMismatch { left: Category, right: Category },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("oracle universe of {size} tuples exceeds the limit of {limit}")]
    UniverseTooLarge { size: u128, limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    Match,
    NoMatch,
    NoConsent,
    Revoked,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Match => "Match",
            Reason::NoMatch => "NoMatch",
            Reason::NoConsent => "NoConsent",
            Reason::Revoked => "Revoked",
        }
    }

    pub fn parse(s: &str) -> Option<Reason> {
        [Reason::Match, Reason::NoMatch, Reason::NoConsent, Reason::Revoked].into_iter().find(|r| r.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplianceResult {
    pub compliant: bool,
    /// Lowest-index basic policy that on its own authorises the whole
    /// content. When only a combination of basics covers the content this
    /// is the lowest index taking part in the cover.
    pub matched_basic: Option<usize>,
    pub reason: Reason,
}

impl ComplianceResult {
    pub fn matched(index: usize) -> Self {
        ComplianceResult { compliant: true, matched_basic: Some(index), reason: Reason::Match }
    }

    pub fn rejected(reason: Reason) -> Self {
        debug_assert_ne!(reason, Reason::Match);
        ComplianceResult { compliant: false, matched_basic: None, reason }
    }
}

/// Category of a well-formed expression (from its first atom, `Top` or
/// `Null`), checking that every atom agrees.
pub fn category_of(e: &ClassExpr, t: &Taxonomy) -> Result<Category, ReasonerError> {
    fn walk(e: &ClassExpr, t: &Taxonomy, found: &mut Option<Category>) -> Result<(), ReasonerError> {
        let cat = match e {
            ClassExpr::Atom(id) => {
                t.category_of(id).ok_or_else(|| ReasonerError::UnknownClass(t.prefixes().compact(id)))?
            }
            ClassExpr::Top(c) | ClassExpr::Null(c) => *c,
            ClassExpr::Union(xs) | ClassExpr::Intersection(xs) => {
                return xs.iter().try_for_each(|x| walk(x, t, found));
            }
        };
        match found {
            Some(prev) if *prev != cat => Err(ReasonerError::CategoryMismatch { left: *prev, right: cat }),
            _ => {
                *found = Some(cat);
                Ok(())
            }
        }
    }
    let mut found = None;
    walk(e, t, &mut found)?;
    found.ok_or(ReasonerError::Policy(PolicyError::EmptyUnion(Attribute::Data)))
}

/// Whether `c` denotes a subset of `d`.
pub fn subsumes_expr(c: &ClassExpr, d: &ClassExpr, t: &Taxonomy) -> Result<bool, ReasonerError> {
    let (cc, dc) = (category_of(c, t)?, category_of(d, t)?);
    if cc != dc {
        return Err(ReasonerError::CategoryMismatch { left: cc, right: dc });
    }
    let (rc, rd) = (resolve(c, t)?, resolve(d, t)?);
    Ok(generators(&rc, t).into_iter().all(|g| member(g, &rd, t)))
}

/// Interval containment, class subsumption, and `false` for mixed kinds.
pub fn duration_contained(c: &DurationExpr, p: &DurationExpr, t: &Taxonomy) -> bool {
    match (c, p) {
        (
            DurationExpr::Interval { min_days: cmin, max_days: cmax },
            DurationExpr::Interval { min_days: pmin, max_days: pmax },
        ) => {
            cmin >= pmin
                && match (cmax, pmax) {
                    (_, None) => true,
                    (None, Some(_)) => false,
                    (Some(cm), Some(pm)) => cm <= pm,
                }
        }
        (DurationExpr::Class(a), DurationExpr::Class(b)) => t.is_subclass(a, b).unwrap_or(false),
        _ => false,
    }
}

/// Whether union-free content `c` is authorised by the single basic `p`:
/// componentwise subsumption plus duration containment, or vacuously when
/// some attribute of `c` denotes the empty set.
pub fn basic_subsumed(c: &LogContent, p: &BasicPolicy, t: &Taxonomy) -> Result<bool, ReasonerError> {
    let compiled = compile_basic(p, t)?;
    let mut all = true;
    for a in Attribute::ALL {
        let gens = generators(&resolve(c.attr(a), t)?, t);
        if gens.is_empty() {
            return Ok(true);
        }
        all &= gens.into_iter().all(|g| member(g, &compiled.attrs[a as usize], t));
    }
    let dur = compile_duration(c.duration(), t)?;
    Ok(all && compiled.duration.covers_single(&dur, t))
}

/// Checks `c` against `consent`.
pub fn complies(c: &LogContent, consent: &GeneralPolicy, t: &Taxonomy) -> Result<ComplianceResult, ReasonerError> {
    CompiledPolicy::compile(consent, t)?.check(c, t)
}

impl CompiledPolicy {
    /// Checks content against this precompiled consent.
    pub fn check(&self, c: &LogContent, t: &Taxonomy) -> Result<ComplianceResult, ReasonerError> {
        let n = self.basics.len();
        let mut alone = vec![true; n];
        let mut contributors: Option<usize> = None;
        for branch in dnf(c) {
            let mut gens: Vec<Vec<_>> = Vec::with_capacity(5);
            for a in Attribute::ALL {
                gens.push(generators(&resolve(branch.attr(a), t)?, t));
            }
            if gens.iter().any(Vec::is_empty) {
                continue;
            }
            let dur = compile_duration(branch.duration(), t)?;
            let mut tuple = [0usize; 5];
            loop {
                let cands: Vec<usize> = (0..n)
                    .filter(|&j| {
                        let b = &self.basics[j];
                        (0..5).all(|k| member(gens[k][tuple[k]], &b.attrs[k], t))
                    })
                    .collect();
                for (j, flag) in alone.iter_mut().enumerate() {
                    *flag = *flag && cands.contains(&j) && self.basics[j].duration.covers_single(&dur, t);
                }
                match CompiledDuration::cover(&dur, cands.iter().map(|&j| (j, &self.basics[j].duration)), t) {
                    Some(first) => contributors = Some(contributors.map_or(first, |c| c.min(first))),
                    None => return Ok(ComplianceResult::rejected(Reason::NoMatch)),
                }
                // next tuple in the cartesian product
                let mut k = 0;
                while k < 5 {
                    tuple[k] += 1;
                    if tuple[k] < gens[k].len() {
                        break;
                    }
                    tuple[k] = 0;
                    k += 1;
                }
                if k == 5 {
                    break;
                }
            }
        }
        let matched = alone.iter().position(|&a| a).or(contributors).unwrap_or(0);
        Ok(ComplianceResult::matched(matched))
    }
}

#[cfg(test)]
mod tests;
