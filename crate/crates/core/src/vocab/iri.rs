use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::VocabError;

pub const SPL: &str = "http://www.specialprivacy.eu/langs/usage-policy#";
pub const SPLOG: &str = "http://www.specialprivacy.eu/langs/splog#";
pub const SVD: &str = "http://www.specialprivacy.eu/vocabs/data#";
pub const SVPR: &str = "http://www.specialprivacy.eu/vocabs/processing#";
pub const SVPU: &str = "http://www.specialprivacy.eu/vocabs/purposes#";
pub const SVR: &str = "http://www.specialprivacy.eu/vocabs/recipients#";
pub const SVL: &str = "http://www.specialprivacy.eu/vocabs/locations#";
pub const SVDU: &str = "http://www.specialprivacy.eu/vocabs/duration#";

/// Expanded IRI of `spl:Null`.
pub const NULL_IRI: &str = "http://www.specialprivacy.eu/langs/usage-policy#Null";

/// An expanded class IRI. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(Arc<str>);

impl ClassId {
    /// Wraps an already-expanded IRI. Use [`PrefixMap::expand`] for
    /// prefixed names.
    pub fn new(iri: impl Into<Arc<str>>) -> Self {
        ClassId(iri.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_null(&self) -> bool {
        &*self.0 == NULL_IRI
    }
}

impl fmt::Debug for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Prefix bindings used to expand compact names (`svd:Location`) and to
/// render IRIs back into compact form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixMap {
    entries: BTreeMap<String, String>,
}

impl Default for PrefixMap {
    fn default() -> Self {
        Self::special()
    }
}

impl PrefixMap {
    pub fn empty() -> Self {
        PrefixMap { entries: BTreeMap::new() }
    }

    /// The `spl`, `splog` and Table-of-vocabularies prefixes.
    pub fn special() -> Self {
        let mut entries = BTreeMap::new();
        for (p, iri) in [
            ("spl", SPL),
            ("splog", SPLOG),
            ("svd", SVD),
            ("svpr", SVPR),
            ("svpu", SVPU),
            ("svr", SVR),
            ("svl", SVL),
            ("svdu", SVDU),
        ] {
            entries.insert(p.to_string(), iri.to_string());
        }
        PrefixMap { entries }
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.entries.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, i)| (p.as_str(), i.as_str()))
    }

    /// Binds `prefix`. Rebinding to the same IRI is a no-op; rebinding to a
    /// different one is rejected.
    pub fn insert(&mut self, prefix: &str, iri: &str) -> Result<(), VocabError> {
        if !is_prefix_name(prefix) {
            return Err(VocabError::InvalidName(prefix.to_string()));
        }
        match self.entries.get(prefix) {
            Some(existing) if existing == iri => Ok(()),
            Some(existing) => Err(VocabError::PrefixConflict {
                prefix: prefix.to_string(),
                existing: existing.clone(),
            }),
            None => {
                self.entries.insert(prefix.to_string(), iri.to_string());
                Ok(())
            }
        }
    }

    /// Expands `<iri>`, `prefix:local`, or an absolute IRI whose scheme is
    /// not a bound prefix (kept verbatim).
    pub fn expand(&self, name: &str) -> Result<ClassId, VocabError> {
        let name = name.trim();
        if let Some(inner) = name.strip_prefix('<') {
            let inner = inner
                .strip_suffix('>')
                .ok_or_else(|| VocabError::InvalidName(name.to_string()))?;
            if inner.is_empty() || inner.contains(char::is_whitespace) {
                return Err(VocabError::InvalidName(name.to_string()));
            }
            return Ok(ClassId::new(inner));
        }
        let (prefix, local) = name
            .split_once(':')
            .ok_or_else(|| VocabError::InvalidName(name.to_string()))?;
        if let Some(base) = self.entries.get(prefix) {
            if local.is_empty() || local.contains(char::is_whitespace) {
                return Err(VocabError::InvalidName(name.to_string()));
            }
            return Ok(ClassId::new(format!("{base}{local}")));
        }
        if is_scheme(prefix) && !local.is_empty() && !name.contains(char::is_whitespace) {
            Ok(ClassId::new(name))
        } else {
            Err(VocabError::InvalidName(name.to_string()))
        }
    }

    /// Longest-base compact form, falling back to the IRI itself (or
    /// `<iri>` when the verbatim form would be mistaken for a prefixed name).
    pub fn compact(&self, id: &ClassId) -> String {
        let iri = id.as_str();
        let best = self
            .entries
            .iter()
            .filter(|(_, base)| iri.len() > base.len() && iri.starts_with(base.as_str()))
            .filter(|(_, base)| is_local_name(&iri[base.len()..]))
            .max_by_key(|(_, base)| base.len());
        if let Some((prefix, base)) = best {
            return format!("{prefix}:{}", &iri[base.len()..]);
        }
        match iri.split_once(':') {
            Some((scheme, _)) if self.entries.contains_key(scheme) => format!("<{iri}>"),
            _ => iri.to_string(),
        }
    }
}

fn is_prefix_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn is_scheme(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

pub(crate) fn is_local_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}
