//! Usage policies and log-entry content over the five-attribute core model
//! (data, processing, purpose, recipient, storage).

use std::fmt;

use thiserror::Error;

use crate::vocab::{Category, ClassId, Taxonomy};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("{attribute}: `{class}` is {found}, expected {expected}")]
    CategoryMismatch { attribute: &'static str, class: String, expected: Category, found: Category },
    #[error("{0}: union and intersection need at least two members")]
    EmptyUnion(Attribute),
    #[error("duration interval [{min}, {max}] is not well ordered")]
    BadInterval { min: u32, max: u32 },
    #[error("a general policy needs at least one basic policy")]
    EmptyPolicy,
}

/// The class-valued attributes. Storage duration is handled separately by
/// [`DurationExpr`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Data,
    Processing,
    Purpose,
    Recipient,
    Location,
}

impl Attribute {
    pub const ALL: [Attribute; 5] =
        [Attribute::Data, Attribute::Processing, Attribute::Purpose, Attribute::Recipient, Attribute::Location];

    pub fn category(self) -> Category {
        match self {
            Attribute::Data => Category::Data,
            Attribute::Processing => Category::Processing,
            Attribute::Purpose => Category::Purpose,
            Attribute::Recipient => Category::Recipient,
            Attribute::Location => Category::Location,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Data => "data",
            Attribute::Processing => "processing",
            Attribute::Purpose => "purpose",
            Attribute::Recipient => "recipient",
            Attribute::Location => "storage.location",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A class expression filling one attribute.
///
/// `Top(c)` and `Atom(root of c)` denote the same set; [`normalized`]
/// rewrites the former into the latter. `Null(c)` is `spl:Null` in
/// category `c` and denotes the empty set.
///
/// [`normalized`]: ClassExpr::normalized
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassExpr {
    Atom(ClassId),
    Union(Vec<ClassExpr>),
    Intersection(Vec<ClassExpr>),
    Top(Category),
    Null(Category),
}

impl ClassExpr {
    pub fn atom(id: ClassId) -> Self {
        ClassExpr::Atom(id)
    }

    /// `None` for an empty list, the member itself for a singleton.
    pub fn any_of(mut members: Vec<ClassExpr>) -> Option<Self> {
        match members.len() {
            0 => None,
            1 => members.pop(),
            _ => Some(ClassExpr::Union(members)),
        }
    }

    pub fn all_of(mut members: Vec<ClassExpr>) -> Option<Self> {
        match members.len() {
            0 => None,
            1 => members.pop(),
            _ => Some(ClassExpr::Intersection(members)),
        }
    }

    pub fn has_union(&self) -> bool {
        match self {
            ClassExpr::Union(_) => true,
            ClassExpr::Intersection(xs) => xs.iter().any(ClassExpr::has_union),
            _ => false,
        }
    }

    /// Atoms in pre-order.
    pub fn atoms(&self) -> Vec<&ClassId> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a ClassId>) {
        match self {
            ClassExpr::Atom(id) => out.push(id),
            ClassExpr::Union(xs) | ClassExpr::Intersection(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            ClassExpr::Top(_) | ClassExpr::Null(_) => {}
        }
    }

    /// Union-free branches whose union is `self`. Intersections distribute
    /// over unions; the branch count of an n-ary intersection is the product
    /// of its members' branch counts.
    pub fn disjuncts(&self) -> Vec<ClassExpr> {
        match self {
            ClassExpr::Union(xs) => xs.iter().flat_map(ClassExpr::disjuncts).collect(),
            ClassExpr::Intersection(xs) if self.has_union() => {
                let mut combos: Vec<Vec<ClassExpr>> = vec![Vec::new()];
                for x in xs {
                    let branches = x.disjuncts();
                    combos = combos
                        .into_iter()
                        .flat_map(|prefix| {
                            branches.iter().map(move |b| {
                                let mut next = prefix.clone();
                                next.push(b.clone());
                                next
                            })
                        })
                        .collect();
                }
                combos.into_iter().map(ClassExpr::Intersection).collect()
            }
            _ => vec![self.clone()],
        }
    }

    /// `Top` rewritten to its root atom, nested same-kind operators
    /// flattened, members sorted and deduplicated, singletons collapsed.
    pub fn normalized(&self) -> ClassExpr {
        match self {
            ClassExpr::Top(c) => ClassExpr::Atom(c.root()),
            ClassExpr::Atom(_) | ClassExpr::Null(_) => self.clone(),
            ClassExpr::Union(xs) => {
                let mut flat = Vec::new();
                for x in xs.iter().map(ClassExpr::normalized) {
                    match x {
                        ClassExpr::Union(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                flat.dedup();
                ClassExpr::any_of(flat).expect("non-empty")
            }
            ClassExpr::Intersection(xs) => {
                let mut flat = Vec::new();
                for x in xs.iter().map(ClassExpr::normalized) {
                    match x {
                        ClassExpr::Intersection(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                flat.dedup();
                ClassExpr::all_of(flat).expect("non-empty")
            }
        }
    }

    /// Checks atoms exist, categories match `attribute`, and operators have
    /// at least two members.
    pub fn validate(&self, attribute: Attribute, t: &Taxonomy) -> Result<(), PolicyError> {
        check_expr(self, attribute.category(), attribute, t)
    }
}

fn check_expr(e: &ClassExpr, cat: Category, attr: Attribute, t: &Taxonomy) -> Result<(), PolicyError> {
    let attribute = attr.name();
    match e {
        ClassExpr::Atom(id) => {
            let found = t.category_of(id).ok_or_else(|| PolicyError::UnknownClass(t.prefixes().compact(id)))?;
            if found != cat {
                return Err(PolicyError::CategoryMismatch {
                    attribute,
                    class: t.prefixes().compact(id),
                    expected: cat,
                    found,
                });
            }
            Ok(())
        }
        ClassExpr::Top(c) | ClassExpr::Null(c) => {
            if *c != cat {
                return Err(PolicyError::CategoryMismatch {
                    attribute,
                    class: if matches!(e, ClassExpr::Top(_)) { "Top".into() } else { "spl:Null".into() },
                    expected: cat,
                    found: *c,
                });
            }
            Ok(())
        }
        ClassExpr::Union(xs) | ClassExpr::Intersection(xs) => {
            if xs.len() < 2 {
                return Err(PolicyError::EmptyUnion(attr));
            }
            xs.iter().try_for_each(|x| check_expr(x, cat, attr, t))
        }
    }
}

/// Storage duration: a duration class or a day interval (`max_days: None`
/// means unbounded).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DurationExpr {
    Class(ClassId),
    Interval { min_days: u32, max_days: Option<u32> },
}

impl DurationExpr {
    /// `[0, ∞)`, the duration assumed when none is stated.
    pub const ANY_DAYS: DurationExpr = DurationExpr::Interval { min_days: 0, max_days: None };

    pub fn days(d: u32) -> Self {
        DurationExpr::Interval { min_days: d, max_days: Some(d) }
    }

    pub fn at_least(min_days: u32) -> Self {
        DurationExpr::Interval { min_days, max_days: None }
    }

    pub fn between(min_days: u32, max_days: u32) -> Self {
        DurationExpr::Interval { min_days, max_days: Some(max_days) }
    }

    pub fn validate(&self, t: &Taxonomy) -> Result<(), PolicyError> {
        match self {
            DurationExpr::Class(id) => match t.category_of(id) {
                None => Err(PolicyError::UnknownClass(t.prefixes().compact(id))),
                Some(Category::Duration) => Ok(()),
                Some(found) => Err(PolicyError::CategoryMismatch {
                    attribute: "storage.duration",
                    class: t.prefixes().compact(id),
                    expected: Category::Duration,
                    found,
                }),
            },
            DurationExpr::Interval { min_days, max_days: Some(max) } if max < min_days => {
                Err(PolicyError::BadInterval { min: *min_days, max: *max })
            }
            DurationExpr::Interval { .. } => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StorageExpr {
    pub location: ClassExpr,
    pub duration: DurationExpr,
}

/// One five-attribute product term. Log-entry content has the same shape
/// (see [`LogContent`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicPolicy {
    pub data: ClassExpr,
    pub processing: ClassExpr,
    pub purpose: ClassExpr,
    pub recipient: ClassExpr,
    pub storage: StorageExpr,
}

/// What a data event actually did, described with the same five attributes
/// as a policy.
pub type LogContent = BasicPolicy;

impl BasicPolicy {
    pub fn attr(&self, a: Attribute) -> &ClassExpr {
        match a {
            Attribute::Data => &self.data,
            Attribute::Processing => &self.processing,
            Attribute::Purpose => &self.purpose,
            Attribute::Recipient => &self.recipient,
            Attribute::Location => &self.storage.location,
        }
    }

    pub fn attr_mut(&mut self, a: Attribute) -> &mut ClassExpr {
        match a {
            Attribute::Data => &mut self.data,
            Attribute::Processing => &mut self.processing,
            Attribute::Purpose => &mut self.purpose,
            Attribute::Recipient => &mut self.recipient,
            Attribute::Location => &mut self.storage.location,
        }
    }

    pub fn duration(&self) -> &DurationExpr {
        &self.storage.duration
    }

    pub fn has_union(&self) -> bool {
        Attribute::ALL.iter().any(|a| self.attr(*a).has_union())
    }

    pub fn normalized(&self) -> BasicPolicy {
        let mut out = self.clone();
        for a in Attribute::ALL {
            *out.attr_mut(a) = self.attr(a).normalized();
        }
        out
    }

    pub fn validate(&self, t: &Taxonomy) -> Result<(), PolicyError> {
        for a in Attribute::ALL {
            self.attr(a).validate(a, t)?;
        }
        self.storage.duration.validate(t)
    }
}

/// A union of basic policies: an operation is authorised when at least one
/// basic authorises it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeneralPolicy {
    basics: Vec<BasicPolicy>,
}

impl GeneralPolicy {
    pub fn new(basics: Vec<BasicPolicy>) -> Result<Self, PolicyError> {
        if basics.is_empty() {
            return Err(PolicyError::EmptyPolicy);
        }
        Ok(GeneralPolicy { basics })
    }

    pub fn single(basic: BasicPolicy) -> Self {
        GeneralPolicy { basics: vec![basic] }
    }

    pub fn basics(&self) -> &[BasicPolicy] {
        &self.basics
    }

    pub fn push(&mut self, basic: BasicPolicy) {
        self.basics.push(basic);
    }

    pub fn validate(&self, t: &Taxonomy) -> Result<(), PolicyError> {
        self.basics.iter().try_for_each(|b| b.validate(t))
    }
}

/// Something that can be checked against a taxonomy.
pub trait Validate {
    fn validate_against(&self, t: &Taxonomy) -> Result<(), PolicyError>;
}

impl Validate for BasicPolicy {
    fn validate_against(&self, t: &Taxonomy) -> Result<(), PolicyError> {
        BasicPolicy::validate(self, t)
    }
}

impl Validate for GeneralPolicy {
    fn validate_against(&self, t: &Taxonomy) -> Result<(), PolicyError> {
        GeneralPolicy::validate(self, t)
    }
}

pub fn validate(p: &impl Validate, t: &Taxonomy) -> Result<(), PolicyError> {
    p.validate_against(t)
}

/// Expands every attribute into its union-free branches and returns the
/// cartesian product (data-major). A union-free input comes back as a
/// singleton equal to itself.
pub fn dnf(c: &LogContent) -> Vec<LogContent> {
    let mut out = vec![c.clone()];
    for a in Attribute::ALL {
        let branches = c.attr(a).disjuncts();
        if branches.len() == 1 && branches[0] == *c.attr(a) {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|partial| {
                branches.iter().map(move |b| {
                    let mut next = partial.clone();
                    *next.attr_mut(a) = b.clone();
                    next
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests;
