//! Class taxonomies for the usage-policy attributes.
//!
//! A [`Taxonomy`] is an immutable DAG of named classes split into six
//! categories, each with a designated root. Subclass reachability is
//! precomputed as ancestor/descendant bitsets so that `is_subclass` is a
//! single bit test.

mod builtin;
mod iri;
mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{builtin_special, BUILTIN_CLASSES};
pub use iri::{ClassId, PrefixMap, NULL_IRI, SPL, SPLOG, SVD, SVDU, SVL, SVPR, SVPU, SVR};
pub use parse::{extend_taxonomy, load_taxonomy};

pub(crate) use iri::is_local_name;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("category mismatch: `{class}` is {found}, expected {expected}")]
    CategoryMismatch { class: String, expected: Category, found: Category },
    #[error("subclass cycle through `{0}`")]
    CycleDetected(String),
    #[error("`{class}` declares unknown parent `{parent}`")]
    UnknownParent { class: String, parent: String },
    #[error("`{0}` is a reserved class and cannot be redeclared")]
    DuplicateClass(String),
    #[error("prefix `{prefix}` is already bound to <{existing}>")]
    PrefixConflict { prefix: String, existing: String },
    #[error("invalid class name `{0}`")]
    InvalidName(String),
}

/// The six attribute categories. Storage contributes two (location and
/// duration).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Data,
    Processing,
    Purpose,
    Recipient,
    Location,
    Duration,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Data,
        Category::Processing,
        Category::Purpose,
        Category::Recipient,
        Category::Location,
        Category::Duration,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Data => "Data",
            Category::Processing => "Processing",
            Category::Purpose => "Purpose",
            Category::Recipient => "Recipient",
            Category::Location => "Location",
            Category::Duration => "Duration",
        }
    }

    /// Expanded IRI of the category root (`spl:AnyData`, ...).
    pub fn root_iri(self) -> &'static str {
        match self {
            Category::Data => "http://www.specialprivacy.eu/langs/usage-policy#AnyData",
            Category::Processing => "http://www.specialprivacy.eu/langs/usage-policy#AnyProcessing",
            Category::Purpose => "http://www.specialprivacy.eu/langs/usage-policy#AnyPurpose",
            Category::Recipient => "http://www.specialprivacy.eu/langs/usage-policy#AnyRecipient",
            Category::Location => "http://www.specialprivacy.eu/langs/usage-policy#AnyLocation",
            Category::Duration => "http://www.specialprivacy.eu/langs/usage-policy#AnyDuration",
        }
    }

    pub fn root(self) -> ClassId {
        ClassId::new(self.root_iri())
    }

    pub fn of_root(id: &ClassId) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.root_iri() == id.as_str())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| VocabError::InvalidName(s.to_string()))
    }
}

/// Dense index of a class inside one [`Taxonomy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassIx(u32);

impl ClassIx {
    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_usize(i: usize) -> Self {
        ClassIx(i as u32)
    }
}

#[derive(Clone, Debug)]
struct Node {
    id: ClassId,
    category: Category,
    parents: Vec<ClassIx>,
    children: Vec<ClassIx>,
}

#[derive(Clone, Debug)]
pub struct Taxonomy {
    prefixes: PrefixMap,
    nodes: Vec<Node>,
    index: HashMap<ClassId, ClassIx>,
    /// Reflexive-transitive superclasses of each class.
    ancestors: Vec<FixedBitSet>,
    descendants: Vec<FixedBitSet>,
    by_category: [Vec<ClassIx>; 6],
}

impl Taxonomy {
    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassId> {
        self.nodes.iter().map(|n| &n.id)
    }

    pub fn contains(&self, id: &ClassId) -> bool {
        self.index.contains_key(id)
    }

    pub fn lookup(&self, id: &ClassId) -> Option<ClassIx> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &ClassId) -> Result<ClassIx, VocabError> {
        self.lookup(id).ok_or_else(|| VocabError::UnknownClass(self.prefixes.compact(id)))
    }

    pub fn class(&self, ix: ClassIx) -> &ClassId {
        &self.nodes[ix.get()].id
    }

    pub fn category_of(&self, id: &ClassId) -> Option<Category> {
        self.lookup(id).map(|ix| self.nodes[ix.get()].category)
    }

    pub fn category_of_ix(&self, ix: ClassIx) -> Category {
        self.nodes[ix.get()].category
    }

    /// Classes of one category, in declaration order (root first).
    pub fn classes_in(&self, category: Category) -> &[ClassIx] {
        &self.by_category[category.index()]
    }

    pub fn root(&self, category: Category) -> ClassIx {
        self.by_category[category.index()][0]
    }

    pub fn parents(&self, ix: ClassIx) -> &[ClassIx] {
        &self.nodes[ix.get()].parents
    }

    pub fn children(&self, ix: ClassIx) -> &[ClassIx] {
        &self.nodes[ix.get()].children
    }

    /// Reflexive-transitive superclasses of `ix`.
    pub fn ancestors(&self, ix: ClassIx) -> &FixedBitSet {
        &self.ancestors[ix.get()]
    }

    /// Reflexive-transitive subclasses of `ix`.
    pub fn descendants(&self, ix: ClassIx) -> &FixedBitSet {
        &self.descendants[ix.get()]
    }

    /// Sorted `(child, parent)` axioms.
    pub fn edges(&self) -> Vec<(ClassId, ClassId)> {
        let mut out: Vec<_> = self
            .nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(move |p| (n.id.clone(), self.class(*p).clone())))
            .collect();
        out.sort();
        out
    }

    pub fn is_subclass_ix(&self, a: ClassIx, b: ClassIx) -> bool {
        self.ancestors[a.get()].contains(b.get())
    }

    /// Reflexive-transitive subclass test. Both classes must exist and
    /// share a category.
    pub fn is_subclass(&self, a: &ClassId, b: &ClassId) -> Result<bool, VocabError> {
        let (ai, bi) = (self.require(a)?, self.require(b)?);
        let (ca, cb) = (self.category_of_ix(ai), self.category_of_ix(bi));
        if ca != cb {
            return Err(VocabError::CategoryMismatch {
                class: self.prefixes.compact(b),
                expected: ca,
                found: cb,
            });
        }
        Ok(self.is_subclass_ix(ai, bi))
    }

    /// All classes subsumed by `c` (including `c`), found by walking child
    /// edges. Deliberately does not read the closure bitsets.
    pub fn extension_of(&self, c: &ClassId) -> Result<BTreeSet<ClassId>, VocabError> {
        let start = self.require(c)?;
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        let mut out = BTreeSet::new();
        seen[start.get()] = true;
        while let Some(ix) = queue.pop_front() {
            out.insert(self.class(ix).clone());
            for &child in self.children(ix) {
                if !seen[child.get()] {
                    seen[child.get()] = true;
                    queue.push_back(child);
                }
            }
        }
        Ok(out)
    }

    /// Resolves a prefixed or absolute name against this taxonomy's prefixes.
    pub fn resolve(&self, name: &str) -> Result<ClassId, VocabError> {
        self.prefixes.expand(name)
    }
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        let cats = |t: &Taxonomy| -> BTreeMap<ClassId, Category> {
            t.nodes.iter().map(|n| (n.id.clone(), n.category)).collect()
        };
        cats(self) == cats(other) && self.edges() == other.edges()
    }
}

impl Eq for Taxonomy {}

/// Accumulates subclass axioms on top of an existing taxonomy (or just the
/// six roots) and validates them on [`build`](TaxonomyBuilder::build).
#[derive(Clone, Debug)]
pub struct TaxonomyBuilder {
    prefixes: PrefixMap,
    base: Vec<(ClassId, Category, Vec<ClassId>)>,
    axioms: Vec<(ClassId, ClassId)>,
}

impl TaxonomyBuilder {
    /// Only the six category roots.
    pub fn roots_only() -> Self {
        TaxonomyBuilder {
            prefixes: PrefixMap::special(),
            base: Category::ALL.iter().map(|c| (c.root(), *c, Vec::new())).collect(),
            axioms: Vec::new(),
        }
    }

    pub fn extending(t: &Taxonomy) -> Self {
        TaxonomyBuilder {
            prefixes: t.prefixes.clone(),
            base: t
                .nodes
                .iter()
                .map(|n| (n.id.clone(), n.category, n.parents.iter().map(|p| t.class(*p).clone()).collect()))
                .collect(),
            axioms: Vec::new(),
        }
    }

    pub fn prefix(&mut self, prefix: &str, iri: &str) -> Result<&mut Self, VocabError> {
        self.prefixes.insert(prefix, iri)?;
        Ok(self)
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn subclass(&mut self, child: ClassId, parent: ClassId) -> &mut Self {
        self.axioms.push((child, parent));
        self
    }

    pub fn build(&self) -> Result<Taxonomy, VocabError> {
        let mut index: HashMap<ClassId, usize> = HashMap::new();
        let mut ids: Vec<ClassId> = Vec::new();
        let mut category: Vec<Option<Category>> = Vec::new();
        let mut parents: Vec<Vec<usize>> = Vec::new();
        let intern = |id: &ClassId,
                      index: &mut HashMap<ClassId, usize>,
                      ids: &mut Vec<ClassId>,
                      category: &mut Vec<Option<Category>>,
                      parents: &mut Vec<Vec<usize>>| {
            *index.entry(id.clone()).or_insert_with(|| {
                ids.push(id.clone());
                category.push(None);
                parents.push(Vec::new());
                ids.len() - 1
            })
        };

        for (id, cat, _) in &self.base {
            let ix = intern(id, &mut index, &mut ids, &mut category, &mut parents);
            category[ix] = Some(*cat);
        }
        for (id, _, ps) in &self.base {
            let ix = index[id];
            for p in ps {
                let pi = index[p];
                if !parents[ix].contains(&pi) {
                    parents[ix].push(pi);
                }
            }
        }

        let known = ids.len();
        for (child, _) in &self.axioms {
            if child.is_null() || Category::of_root(child).is_some() {
                return Err(VocabError::DuplicateClass(self.prefixes.compact(child)));
            }
            intern(child, &mut index, &mut ids, &mut category, &mut parents);
        }
        for (child, parent) in &self.axioms {
            let pi = *index.get(parent).ok_or_else(|| VocabError::UnknownParent {
                class: self.prefixes.compact(child),
                parent: self.prefixes.compact(parent),
            })?;
            let ci = index[child];
            if !parents[ci].contains(&pi) {
                parents[ci].push(pi);
            }
        }

        // Kahn's algorithm: parents before children.
        let n = ids.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &c in &children[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| pending[i] > 0).expect("cycle member");
            return Err(VocabError::CycleDetected(self.prefixes.compact(&ids[stuck])));
        }

        for &i in &order {
            for &p in &parents[i] {
                let pc = category[p].ok_or_else(|| VocabError::UnknownParent {
                    class: self.prefixes.compact(&ids[i]),
                    parent: self.prefixes.compact(&ids[p]),
                })?;
                match category[i] {
                    None => category[i] = Some(pc),
                    Some(c) if c != pc => {
                        return Err(VocabError::CategoryMismatch {
                            class: self.prefixes.compact(&ids[p]),
                            expected: c,
                            found: pc,
                        })
                    }
                    Some(_) => {}
                }
            }
            if category[i].is_none() {
                // Only roots have no parents, and all roots are in the base.
                debug_assert!(i >= known);
                return Err(VocabError::UnknownClass(self.prefixes.compact(&ids[i])));
            }
        }

        let mut ancestors: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(n); n];
        for &i in &order {
            let mut set = FixedBitSet::with_capacity(n);
            set.insert(i);
            for &p in &parents[i] {
                set.union_with(&ancestors[p]);
            }
            ancestors[i] = set;
        }
        let mut descendants: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(n); n];
        for (i, anc) in ancestors.iter().enumerate() {
            for a in anc.ones() {
                descendants[a].insert(i);
            }
        }

        let mut by_category: [Vec<ClassIx>; 6] = Default::default();
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let cat = category[i].expect("resolved above");
            by_category[cat.index()].push(ClassIx(i as u32));
            nodes.push(Node {
                id: ids[i].clone(),
                category: cat,
                parents: parents[i].iter().map(|&p| ClassIx(p as u32)).collect(),
                children: children[i].iter().map(|&c| ClassIx(c as u32)).collect(),
            });
        }
        for (cat, list) in Category::ALL.iter().zip(by_category.iter()) {
            // Roots come first because the base lists them first.
            debug_assert_eq!(nodes[list[0].get()].id.as_str(), cat.root_iri());
        }

        Ok(Taxonomy {
            prefixes: self.prefixes.clone(),
            index: ids.iter().enumerate().map(|(i, id)| (id.clone(), ClassIx(i as u32))).collect(),
            nodes,
            ancestors,
            descendants,
            by_category,
        })
    }
}
